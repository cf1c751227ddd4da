import init, { weight_and_mask, pattern, phantom_demo } from "./pkg/kdiff_web.js";

const SIZE = 64;
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function draw(canvasId, values, offset = 0) {
  const canvas = $(canvasId);
  canvas.width = SIZE;
  canvas.height = SIZE;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(SIZE, SIZE);
  for (let i = 0; i < SIZE * SIZE; i++) {
    const v = Math.round(255 * values[offset + i]);
    img.data.set([v, v, v, 255], 4 * i);
  }
  ctx.putImageData(img, 0, 0);
}

function guard(fn) {
  return () => {
    try {
      $("status").textContent = "";
      fn();
    } catch (e) {
      $("status").textContent = String(e.message ?? e);
    }
  };
}

const updateWeight = guard(() => {
  const v = weight_and_mask(SIZE, num("w-r"), num("w-p"), num("w-a"));
  draw("c-weight", v, 0);
  draw("c-mask", v, SIZE * SIZE);
});

const updatePattern = guard(() => {
  const p = pattern($("s-kind").value, SIZE, num("s-r"), num("s-acs"), num("s-seed"));
  draw("c-pattern", p.mask);
  $("s-info").textContent = `achieved R = ${p.achieved_r.toFixed(2)} (${p.sampled} samples)`;
  p.free();
});

const runRecon = guard(() => {
  const r = phantom_demo(SIZE, $("s-kind").value, num("s-r"), num("r-levels"), num("s-seed"));
  draw("c-truth", r.truth);
  draw("c-zf", r.zero_filled);
  draw("c-rec", r.recon);
  $("r-zf").textContent = `zero-filled: ${r.psnr_zero_filled.toFixed(2)} dB, SSIM ${r.ssim_zero_filled.toFixed(3)}`;
  $("r-rec").textContent = `reconstruction: ${r.psnr.toFixed(2)} dB, SSIM ${r.ssim.toFixed(3)}`;
  r.free();
});

await init();
$("status").textContent = "";
for (const id of ["w-r", "w-p", "w-a"]) $(id).addEventListener("input", updateWeight);
for (const id of ["s-kind", "s-r", "s-acs", "s-seed"]) $(id).addEventListener("input", updatePattern);
$("r-run").addEventListener("click", () => {
  $("status").textContent = "Running...";
  setTimeout(runRecon, 20);
});
updateWeight();
updatePattern();
