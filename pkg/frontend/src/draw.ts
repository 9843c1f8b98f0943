/**
 * Canvas rendering of the server-provided drawing data: ray fan,
 * surfaces, control polygons with drag handles, locked pins.
 * Everything drawn comes from the trace response; the client never
 * evaluates curves.
 */

import type { SurfaceDrawing, TraceResponse } from './api.js';
import type { Editor, PointRef } from './editor.js';

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
  height: number;
}

export function fitView(trace: TraceResponse, width: number, height: number): ViewTransform {
  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  const consume = (pts: [number, number][]) => {
    for (const [x, y] of pts) {
      xMin = Math.min(xMin, x);
      xMax = Math.max(xMax, x);
      yMin = Math.min(yMin, y);
      yMax = Math.max(yMax, y);
    }
  };
  for (const s of [...trace.surfaces, trace.skin]) consume(s.points);
  for (const r of trace.rays) consume(r.points);
  const margin = 20;
  const scale = Math.min(
    (width - 2 * margin) / Math.max(xMax - xMin, 1e-9),
    (height - 2 * margin) / Math.max(yMax - yMin, 1e-9),
  );
  return {
    scale,
    offsetX: margin - xMin * scale,
    offsetY: margin - yMin * scale,
    height,
  };
}

export function worldToCanvas(view: ViewTransform, p: [number, number]): [number, number] {
  // Flip y: world grows upward, canvas downward.
  return [p[0] * view.scale + view.offsetX, view.height - (p[1] * view.scale + view.offsetY)];
}

export function canvasToWorld(view: ViewTransform, p: [number, number]): [number, number] {
  return [(p[0] - view.offsetX) / view.scale, (view.height - p[1] - view.offsetY) / view.scale];
}

const RAY_COLORS: Record<string, string> = {
  skin_hit: 'rgba(208, 64, 64, 0.45)',
  escaped: 'rgba(170, 170, 170, 0.4)',
  absorbed: 'rgba(120, 120, 40, 0.5)',
  tir: 'rgba(160, 60, 160, 0.5)',
  max_bounces: 'rgba(60, 60, 60, 0.5)',
};

const SURFACE_COLORS: Record<string, string> = {
  reflective: '#74b8d8',
  refractive: '#2e6fb0',
  absorbing: '#7a7a7a',
};

function polyline(ctx: CanvasRenderingContext2D, view: ViewTransform,
                  pts: [number, number][]): void {
  ctx.beginPath();
  pts.forEach((p, i) => {
    const [x, y] = worldToCanvas(view, p);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
}

function drawSurface(ctx: CanvasRenderingContext2D, view: ViewTransform,
                     surface: SurfaceDrawing, editor: Editor, ref: PointRef | null): void {
  ctx.strokeStyle = SURFACE_COLORS[surface.kind] ?? '#444';
  ctx.lineWidth = surface.name === 'skin' ? 3 : 2;
  polyline(ctx, view, surface.points);
  if (!surface.control_points || !surface.movable) return;

  ctx.lineWidth = 1;
  ctx.setLineDash([3, 4]);
  ctx.strokeStyle = 'rgba(100, 100, 100, 0.6)';
  polyline(ctx, view, surface.control_points);
  ctx.setLineDash([]);
  surface.control_points.forEach((p, i) => {
    const locked = ref ? editor.isLocked({ ...ref, pointIndex: i }) : false;
    const [x, y] = worldToCanvas(view, p);
    ctx.beginPath();
    ctx.arc(x, y, locked ? 4 : 5, 0, 2 * Math.PI);
    ctx.fillStyle = locked ? '#9aa2ab' : '#2563eb';
    ctx.fill();
    ctx.strokeStyle = '#ffffff';
    ctx.stroke();
    if (locked) {
      ctx.beginPath();
      ctx.moveTo(x - 3, y);
      ctx.lineTo(x + 3, y);
      ctx.strokeStyle = '#ffffff';
      ctx.stroke();
    }
  });
}

export function renderScene(ctx: CanvasRenderingContext2D, editor: Editor,
                            width: number, height: number): ViewTransform | null {
  ctx.clearRect(0, 0, width, height);
  const trace = editor.lastTrace;
  if (!trace) return null;
  const view = fitView(trace, width, height);

  ctx.lineWidth = 0.7;
  for (const ray of trace.rays) {
    ctx.strokeStyle = RAY_COLORS[ray.terminal] ?? '#999';
    polyline(ctx, view, ray.points);
  }

  trace.surfaces.forEach((surface, idx) => {
    const surfaceIndex = editor.scene
      ? editor.scene.surfaces.findIndex((s) => s.name === surface.name)
      : -1;
    const ref: PointRef | null = surface.movable && surfaceIndex >= 0
      ? { target: 'surface', surfaceIndex, pointIndex: 0 }
      : null;
    drawSurface(ctx, view, surface, editor, ref);
  });
  drawSurface(ctx, view, trace.skin, editor,
              { target: 'skin', surfaceIndex: -1, pointIndex: 0 });

  const [cx, cy] = worldToCanvas(view, trace.camera.pinhole);
  ctx.beginPath();
  ctx.arc(cx, cy, 4, 0, 2 * Math.PI);
  ctx.fillStyle = '#101010';
  ctx.fill();

  if (editor.ghost) {
    const [gx, gy] = worldToCanvas(view, editor.ghost.position);
    ctx.beginPath();
    ctx.arc(gx, gy, 6, 0, 2 * Math.PI);
    ctx.strokeStyle = '#f59e0b';
    ctx.lineWidth = 2;
    ctx.stroke();
  }
  return view;
}

/** Nearest draggable control point within `radius` canvas px, if any. */
export function hitTestControlPoint(editor: Editor, view: ViewTransform,
                                    canvasPoint: [number, number],
                                    radius = 9): PointRef | null {
  const trace = editor.lastTrace;
  const scene = editor.scene;
  if (!trace || !scene) return null;
  let best: PointRef | null = null;
  let bestDist = radius;
  const consider = (ref: PointRef, p: [number, number]) => {
    const [x, y] = worldToCanvas(view, p);
    const d = Math.hypot(x - canvasPoint[0], y - canvasPoint[1]);
    if (d < bestDist) {
      bestDist = d;
      best = ref;
    }
  };
  for (const surface of trace.surfaces) {
    if (!surface.movable || !surface.control_points) continue;
    const surfaceIndex = scene.surfaces.findIndex((s) => s.name === surface.name);
    if (surfaceIndex < 0) continue;
    surface.control_points.forEach((p, i) =>
      consider({ target: 'surface', surfaceIndex, pointIndex: i }, p));
  }
  if (trace.skin.movable && trace.skin.control_points) {
    trace.skin.control_points.forEach((p, i) =>
      consider({ target: 'skin', surfaceIndex: -1, pointIndex: i }, p));
  }
  return best;
}
