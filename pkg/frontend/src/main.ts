/**
 * Browser wiring: canvas, metrics panel, optimization controls.
 * Serve the backend with `fingertrace serve --port 8040` and open
 * index.html (same origin or set ?api=http://host:port).
 */

import { HttpTransport } from './api.js';
import { canvasToWorld, hitTestControlPoint, renderScene } from './draw.js';
import { Editor } from './editor.js';
import { panelModel } from './format.js';

const params = new URLSearchParams(window.location.search);
const apiBase = params.get('api') ?? '';
const editor = new Editor(new HttpTransport(apiBase));

const canvas = document.getElementById('scene') as HTMLCanvasElement;
const ctx = canvas.getContext('2d')!;
const panel = document.getElementById('panel')!;
const bannerEl = document.getElementById('banner')!;
const diagnosticEl = document.getElementById('diagnostic')!;
const historyCanvas = document.getElementById('history') as HTMLCanvasElement;
const historyCtx = historyCanvas.getContext('2d')!;
const budgetInput = document.getElementById('budget') as HTMLInputElement;
const seedInput = document.getElementById('seed') as HTMLInputElement;
const startButton = document.getElementById('start') as HTMLButtonElement;
const adoptButton = document.getElementById('adopt') as HTMLButtonElement;
const jobStatusEl = document.getElementById('job-status')!;

let view = renderScene(ctx, editor, canvas.width, canvas.height);
let pollTimer: number | null = null;

function drawSparkline(values: [number, number][]): string {
  if (values.length < 2) return '';
  const w = 160;
  const h = 28;
  const xs = values.map((v) => v[0]);
  const ys = values.map((v) => v[1]);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const pts = values
    .map(([x, y]) => {
      const px = ((x - xMin) / Math.max(xMax - xMin, 1e-9)) * w;
      const py = h - ((y - yMin) / Math.max(yMax - yMin, 1e-9)) * h;
      return `${px.toFixed(1)},${py.toFixed(1)}`;
    })
    .join(' ');
  return `<svg width="${w}" height="${h}"><polyline points="${pts}" ` +
    `fill="none" stroke="#2e6fb0" stroke-width="1"/></svg>` +
    `<div class="hint">px/mm along the skin (${yMin.toFixed(1)}..${yMax.toFixed(1)})</div>`;
}

function refreshPanel(): void {
  if (!editor.lastTrace) {
    panel.innerHTML = '<em>no trace yet</em>';
    return;
  }
  const m = panelModel(editor.lastTrace);
  panel.innerHTML = [
    `<div>${m.coverageText}</div>`,
    `<div>${m.minAngleText}</div>`,
    `<div>${m.hitText}</div>`,
    m.blindZoneWarning ? '<div class="warn">blind zone: no skin coverage</div>' : '',
    drawSparkline(m.resolutionSparkline),
  ].join('');
}

function refreshJob(): void {
  jobStatusEl.textContent = editor.jobStatus === 'idle' ? '' :
    `job ${editor.jobStatus}${editor.jobError ? `: ${editor.jobError}` : ''}`;
  startButton.disabled = editor.jobStatus === 'running';
  adoptButton.disabled = editor.jobStatus !== 'done';
  const best = editor.runningBest();
  historyCtx.clearRect(0, 0, historyCanvas.width, historyCanvas.height);
  if (best.length > 1) {
    const lo = Math.min(...best);
    const hi = Math.max(...best);
    historyCtx.beginPath();
    best.forEach((v, i) => {
      const x = (i / (best.length - 1)) * historyCanvas.width;
      const y = historyCanvas.height -
        ((v - lo) / Math.max(hi - lo, 1e-9)) * (historyCanvas.height - 4) - 2;
      if (i === 0) historyCtx.moveTo(x, y);
      else historyCtx.lineTo(x, y);
    });
    historyCtx.strokeStyle = '#d04040';
    historyCtx.stroke();
  }
}

editor.onChange((event) => {
  if (event === 'banner') {
    bannerEl.textContent = editor.banner ?? '';
    bannerEl.classList.toggle('visible', editor.banner !== null);
    canvas.classList.toggle('disabled', editor.banner !== null);
    return;
  }
  if (event === 'diagnostic') {
    diagnosticEl.textContent = editor.diagnostic ?? '';
    diagnosticEl.classList.toggle('visible', editor.diagnostic !== null);
  }
  if (event === 'job') {
    refreshJob();
    return;
  }
  view = renderScene(ctx, editor, canvas.width, canvas.height);
  refreshPanel();
});

canvas.addEventListener('mousedown', (ev) => {
  if (!view || editor.banner) return;
  const rect = canvas.getBoundingClientRect();
  const pt: [number, number] = [ev.clientX - rect.left, ev.clientY - rect.top];
  const ref = hitTestControlPoint(editor, view, pt);
  if (ref) {
    const started = editor.beginDrag(ref);
    if (!started && editor.lockedHint) {
      diagnosticEl.textContent = 'this control point is locked';
      diagnosticEl.classList.add('visible');
    }
  }
});

canvas.addEventListener('mousemove', (ev) => {
  if (!view || !editor.ghost) return;
  const rect = canvas.getBoundingClientRect();
  editor.moveDrag(canvasToWorld(view, [ev.clientX - rect.left, ev.clientY - rect.top]));
});

window.addEventListener('mouseup', () => {
  void editor.endDrag();
});

startButton.addEventListener('click', async () => {
  const ok = await editor.startOptimization(Number(budgetInput.value) || 500,
                                            Number(seedInput.value) || 0);
  refreshJob();
  if (!ok) return;
  if (pollTimer !== null) window.clearInterval(pollTimer);
  pollTimer = window.setInterval(async () => {
    await editor.pollOptimization();
    if (editor.jobStatus !== 'running' && pollTimer !== null) {
      window.clearInterval(pollTimer);
      pollTimer = null;
    }
  }, 500);
});

adoptButton.addEventListener('click', () => {
  void editor.adoptResult();
});

void editor.load();
