//! In-place forward 3-D FFT over a z-fastest array, one axis at a time.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{for_each_chunk_mut, map_chunks};

pub(crate) struct Fft3 {
    dims: [usize; 3],
    plans: [std::sync::Arc<dyn rustfft::Fft<f64>>; 3],
}

impl Fft3 {
    pub(crate) fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let plans = dims.map(|n| planner.plan_fft_forward(n));
        Self { dims, plans }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        let [n0, n1, n2] = self.dims;
        debug_assert_eq!(data.len(), n0 * n1 * n2);
        // z: contiguous lines
        for_each_chunk_mut(data, n2 * 64, |_, block| {
            for line in block.chunks_mut(n2) {
                self.plans[2].process(line);
            }
        });
        // y: strided lines inside each x-slab
        for_each_chunk_mut(data, n1 * n2, |_, slab| {
            let mut line = vec![Complex64::default(); n1];
            for k in 0..n2 {
                for j in 0..n1 {
                    line[j] = slab[j * n2 + k];
                }
                self.plans[1].process(&mut line);
                for j in 0..n1 {
                    slab[j * n2 + k] = line[j];
                }
            }
        });
        // x: gather columns, transform, scatter back
        let stride = n1 * n2;
        let columns: Vec<usize> = (0..stride).collect();
        let out = map_chunks(&columns, 256, |_, cols| {
            let mut block = Vec::with_capacity(cols.len() * n0);
            let mut line = vec![Complex64::default(); n0];
            for &c in cols {
                for i in 0..n0 {
                    line[i] = data[i * stride + c];
                }
                self.plans[0].process(&mut line);
                block.extend_from_slice(&line);
            }
            block
        });
        for (b, block) in out.iter().enumerate() {
            for (t, line) in block.chunks(n0).enumerate() {
                let c = b * 256 + t;
                for i in 0..n0 {
                    data[i * stride + c] = line[i];
                }
            }
        }
    }
}
