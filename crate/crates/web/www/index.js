import init, { spectrum, contrast, calibration } from "./pkg/odmr_web.js";

const COLORS = ["#1f5aa6", "#c0392b", "#2a8c55", "#7d3c98"];

// series: [{ name, x, y, points? }]
function plot(canvas, series, xLabel, yLabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, m = 48;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap(s => s.x), ys = series.flatMap(s => s.y);
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }
  const pad = 0.05 * (y1 - y0);
  y0 -= pad; y1 += pad;
  const px = x => m + (x - x0) / (x1 - x0) * (w - 2 * m);
  const py = y => h - m - (y - y0) / (y1 - y0) * (h - 2 * m);

  ctx.strokeStyle = "#444";
  ctx.strokeRect(m, m, w - 2 * m, h - 2 * m);
  ctx.fillStyle = "#222";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "center";
  for (let k = 0; k <= 4; k++) {
    const xv = x0 + k / 4 * (x1 - x0);
    ctx.fillText(xv.toPrecision(4), px(xv), h - m + 14);
  }
  ctx.fillText(xLabel, w / 2, h - 8);
  ctx.textAlign = "right";
  for (let k = 0; k <= 4; k++) {
    const yv = y0 + k / 4 * (y1 - y0);
    ctx.fillText(yv.toPrecision(3), m - 4, py(yv) + 4);
  }
  ctx.textAlign = "left";
  ctx.fillText(yLabel, 4, m - 10);

  series.forEach((s, i) => {
    ctx.strokeStyle = ctx.fillStyle = COLORS[i % COLORS.length];
    if (s.points) {
      s.x.forEach((x, j) => ctx.fillRect(px(x) - 1.5, py(s.y[j]) - 1.5, 3, 3));
    } else {
      ctx.beginPath();
      s.x.forEach((x, j) => (j ? ctx.lineTo : ctx.moveTo).call(ctx, px(x), py(s.y[j])));
      ctx.stroke();
    }
    ctx.fillText(s.name, w - m - 120, m + 14 + 14 * i);
  });
}

function values(fieldset) {
  const v = {};
  for (const input of fieldset.querySelectorAll("input")) v[input.name] = Number(input.value);
  return v;
}

function bind(id, compute) {
  const fs = document.getElementById(id);
  const canvas = fs.querySelector("canvas"), text = fs.querySelector("pre");
  const update = () => {
    try {
      compute(values(fs), canvas, text);
      text.classList.remove("err");
    } catch (e) {
      text.textContent = String(e);
      text.classList.add("err");
    }
  };
  fs.addEventListener("input", update);
  update();
}

await init();

bind("spectrum", (v, canvas, text) => {
  const r = JSON.parse(spectrum(v.d, v.e, v.linewidth, v.amplitude, v.noise, v.seed));
  plot(canvas, [{ name: "signal", x: r.freqs, y: r.signal }], "frequency (MHz)", "ΔI/I");
  const t = r.transitions;
  text.textContent = `f_xy = ${t.f_xy.toFixed(3)}  f_yz = ${t.f_yz.toFixed(3)}  f_xz = ${t.f_xz.toFixed(3)} MHz`;
});

bind("contrast", (v, canvas, text) => {
  const r = JSON.parse(contrast(v.tx, v.ty, v.tz, v.bx, v.by, v.mw, 60));
  plot(canvas, ["xy", "yz", "xz"].map(k => ({ name: k, x: r.mw_rate, y: r[k] })),
    "drive rate (1/μs)", "ΔI/I");
  const [tx, ty, tz] = r.triplet.map(p => p.toExponential(3));
  text.textContent = `undriven triplet populations: Tx ${tx}  Ty ${ty}  Tz ${tz}`;
});

bind("calibration", (v, canvas, text) => {
  const r = JSON.parse(calibration(v.noise, v.seed, v.segments));
  plot(canvas, [
    { name: "measured", x: r.temperature, y: r.measured, points: true },
    { name: "fit", x: r.temperature, y: r.fitted },
  ], "temperature (K)", "f_xz (MHz)");
  const bps = r.breakpoints.map(b => b.toFixed(1)).join(", ") || "none";
  const slopes = r.slopes_khz.map(s => s.toFixed(1)).join(", ");
  text.textContent = `breakpoints: ${bps} K\nslopes: ${slopes} kHz/K\nSSE: ${r.sse.toExponential(3)} MHz²`;
});
