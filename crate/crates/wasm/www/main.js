import init, { profile, green, decay } from "./pkg/dspstab_wasm.js";

const $ = (id) => document.getElementById(id);

function plot(canvas, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 36;
  ctx.clearRect(0, 0, w, h);
  const pts = series.flatMap((s) => s.x.map((x, i) => [x, s.y[i]])).filter(([x, y]) => Number.isFinite(x) && Number.isFinite(y));
  if (pts.length === 0) return;
  let [x0, x1] = [Math.min(...pts.map((p) => p[0])), Math.max(...pts.map((p) => p[0]))];
  let [y0, y1] = [Math.min(...pts.map((p) => p[1])), Math.max(...pts.map((p) => p[1]))];
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) y1 = y0 + 1;
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#000";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#000";
  ctx.font = "11px sans-serif";
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  ctx.fillText((opts.xfmt || String)(x0), pad, h - pad + 14);
  ctx.fillText((opts.xfmt || String)(x1), w - pad - 30, h - pad + 14);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dashed ? [6, 4] : []);
    ctx.beginPath();
    let started = false;
    s.x.forEach((x, i) => {
      const y = s.y[i];
      if (!Number.isFinite(y)) { started = false; return; }
      started ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y));
      started = true;
    });
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function run(fn, out) {
  try {
    return JSON.parse(fn());
  } catch (e) {
    $(out).textContent = `error: ${e}`;
    return null;
  }
}

function updateProfile() {
  const delta = Number($("p-delta").value);
  $("p-delta-v").textContent = delta.toFixed(2);
  const r = run(() => profile(Number($("p-nu").value), Number($("p-d").value), delta), "p-out");
  if (!r) return;
  plot($("p-canvas"), [{ x: r.j, y: r.u, color: "#1f4e79" }]);
  $("p-out").textContent = `mass ${r.mass.toExponential(6)}  residual ${r.residual.toExponential(2)}  iterations ${r.iterations}`;
}

function updateGreen() {
  const n = Number($("g-n").value);
  $("g-n-v").textContent = n;
  const r = run(() => green(Number($("p-nu").value), Number($("p-d").value), Number($("g-j0").value), n), "g-out");
  if (!r) return;
  plot($("g-canvas"), [
    { x: r.j, y: r.green, color: "#1f4e79" },
    { x: r.j, y: r.leading, color: "#c0392b", dashed: true },
  ]);
  $("g-out").textContent = `mass ${r.mass.toFixed(12)}   solid: column, dashed: leading term`;
}

function updateDecay() {
  const r = run(() => decay(Number($("d-choice").value), Number($("d-p").value), Number($("d-j").value), Number($("d-n").value)), "d-out");
  if (!r) return;
  const x = r.n.slice(1).map(Math.log);
  const [a, b] = r.window;
  const ref = (y0, slope) => ({ x: [Math.log(a), Math.log(b)], y: [y0, y0 + slope * (Math.log(b) - Math.log(a))], color: "#999", dashed: true });
  plot($("d-canvas"), [
    { x, y: r.env_l1.slice(1), color: "#1f4e79" },
    { x, y: r.env_linf.slice(1), color: "#2e8b57" },
    ref(r.env_l1[a], r.target_l1),
  ], { xfmt: (v) => `n=${Math.round(Math.exp(v))}` });
  const f = (s) => (s === null ? "none" : s.toFixed(4));
  $("d-out").textContent =
    `window n in [${a}, ${b}]\n` +
    `l1   slope ${f(r.slope_l1)}  target ${r.target_l1}  ${r.verdict_l1}\n` +
    `linf slope ${f(r.slope_linf)}  target ${r.target_linf}  ${r.verdict_linf}`;
}

await init();
for (const id of ["p-nu", "p-d", "p-delta"]) $(id).addEventListener("input", () => { updateProfile(); updateGreen(); });
for (const id of ["g-j0", "g-n"]) $(id).addEventListener("input", updateGreen);
$("d-run").addEventListener("click", updateDecay);
updateProfile();
updateGreen();
updateDecay();
