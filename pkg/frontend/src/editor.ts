/**
 * Editor state machine: scene mirror, drag-with-debounce commits,
 * optimization job lifecycle.  Contains no DOM and no geometry math, so
 * the whole interaction protocol is testable with a mocked transport.
 *
 * Invariants kept here:
 *  - rendered geometry always reflects the last server-acknowledged scene;
 *    an unacknowledged drag only moves the ghost overlay;
 *  - every displayed number originates from a server response;
 *  - at most one trace request is in flight (latest wins);
 *  - a drag burst issues at most one debounced commit plus the release
 *    commit (<= 2 traces).
 */

import type {
  PutSceneResult,
  SceneConfig,
  TraceResponse,
  Transport,
} from './api.js';

export const DRAG_DEBOUNCE_MS = 120;

/** Injectable timer so tests can run the debounce deterministically. */
export interface Scheduler {
  schedule(delayMs: number, fn: () => void): () => void;
}

export const realScheduler: Scheduler = {
  schedule(delayMs, fn) {
    const handle = setTimeout(fn, delayMs);
    return () => clearTimeout(handle);
  },
};

/** A draggable control point: which spline it belongs to and its index. */
export interface PointRef {
  target: 'surface' | 'skin';
  surfaceIndex: number; // index into config.surfaces; ignored for skin
  pointIndex: number;
}

export interface GhostDrag {
  ref: PointRef;
  position: [number, number];
}

export type EditorEvent =
  | 'scene'
  | 'trace'
  | 'ghost'
  | 'diagnostic'
  | 'banner'
  | 'job';

export class Editor {
  scene: SceneConfig | null = null;
  sceneText = '';
  lastTrace: TraceResponse | null = null;
  ghost: GhostDrag | null = null;
  diagnostic: string | null = null;
  banner: string | null = null;
  lockedHint = false;

  jobId: string | null = null;
  jobStatus: 'idle' | 'running' | 'done' | 'failed' = 'idle';
  jobHistory: { evaluation: number; score: number }[] = [];
  jobBestConfig: string | null = null;
  jobError: string | null = null;

  traceRequests = 0;
  putRequests = 0;

  private cancelDebounce: (() => void) | null = null;
  private traceInFlight = false;
  private traceQueued = false;
  private listeners: ((event: EditorEvent) => void)[] = [];

  constructor(private readonly transport: Transport,
              private readonly scheduler: Scheduler = realScheduler) {}

  onChange(listener: (event: EditorEvent) => void): void {
    this.listeners.push(listener);
  }

  private emit(event: EditorEvent): void {
    for (const fn of this.listeners) fn(event);
  }

  async load(): Promise<void> {
    try {
      this.sceneText = await this.transport.getScene();
      this.scene = JSON.parse(this.sceneText) as SceneConfig;
      this.banner = null;
      this.emit('scene');
      await this.retrace();
    } catch (err) {
      this.banner = `server unreachable: ${String(err)}`;
      this.emit('banner');
    }
  }

  /** Latest-wins trace: coalesces requests while one is in flight. */
  async retrace(): Promise<void> {
    if (this.traceInFlight) {
      this.traceQueued = true;
      return;
    }
    this.traceInFlight = true;
    try {
      this.traceRequests += 1;
      this.lastTrace = await this.transport.postTrace();
      this.banner = null;
      this.emit('trace');
    } catch (err) {
      this.banner = `server unreachable: ${String(err)}`;
      this.emit('banner');
    } finally {
      this.traceInFlight = false;
      if (this.traceQueued) {
        this.traceQueued = false;
        await this.retrace();
      }
    }
  }

  /** Mask lookup for a control point, from the server's design mask. */
  isLocked(ref: PointRef): boolean {
    if (!this.lastTrace || !this.scene) return false;
    const mask = this.lastTrace.fixed_mask;
    let cursor = 0;
    for (let i = 0; i < this.scene.surfaces.length; i++) {
      const spec = this.scene.surfaces[i];
      const movable =
        spec.kind === 'reflective' &&
        spec.shape.type === 'bspline' &&
        (spec.shape.degree ?? 0) >= 2;
      if (!movable) continue;
      const n = spec.shape.control_points?.length ?? 0;
      if (ref.target === 'surface' && ref.surfaceIndex === i) {
        return mask[cursor + 2 * ref.pointIndex] === true;
      }
      cursor += 2 * n;
    }
    if (ref.target === 'skin') {
      return mask[cursor + 2 * ref.pointIndex] === true;
    }
    return false;
  }

  beginDrag(ref: PointRef): boolean {
    this.lockedHint = false;
    if (this.isLocked(ref)) {
      this.lockedHint = true;
      this.emit('ghost');
      return false;
    }
    const start = this.pointPosition(ref);
    if (!start) return false;
    this.ghost = { ref, position: start };
    this.emit('ghost');
    return true;
  }

  moveDrag(position: [number, number]): void {
    if (!this.ghost) return;
    this.ghost = { ref: this.ghost.ref, position };
    this.emit('ghost');
    if (this.cancelDebounce) this.cancelDebounce();
    this.cancelDebounce = this.scheduler.schedule(DRAG_DEBOUNCE_MS, () => {
      this.cancelDebounce = null;
      void this.commitGhost(false);
    });
  }

  async endDrag(): Promise<void> {
    if (!this.ghost) return;
    if (this.cancelDebounce) {
      this.cancelDebounce();
      this.cancelDebounce = null;
    }
    await this.commitGhost(true);
  }

  private pointPosition(ref: PointRef): [number, number] | null {
    if (!this.scene) return null;
    const shape =
      ref.target === 'skin' ? this.scene.skin : this.scene.surfaces[ref.surfaceIndex]?.shape;
    const pt = shape?.control_points?.[ref.pointIndex];
    return pt ? [pt[0], pt[1]] : null;
  }

  /** PUT the ghost position; on 422 revert and surface the diagnostic. */
  private async commitGhost(release: boolean): Promise<void> {
    if (!this.ghost || !this.scene) return;
    const { ref, position } = this.ghost;
    const candidate = structuredClone(this.scene) as SceneConfig;
    const shape =
      ref.target === 'skin' ? candidate.skin : candidate.surfaces[ref.surfaceIndex].shape;
    if (!shape.control_points) return;
    shape.control_points[ref.pointIndex] = [position[0], position[1]];
    const text = JSON.stringify(candidate);

    this.putRequests += 1;
    let result: PutSceneResult;
    try {
      result = await this.transport.putScene(text);
    } catch (err) {
      this.banner = `server unreachable: ${String(err)}`;
      this.ghost = null;
      this.emit('banner');
      return;
    }
    if (!result.ok) {
      this.ghost = null;
      this.diagnostic = result.field ? `${result.field}: ${result.error}` : result.error;
      this.emit('diagnostic');
      this.emit('ghost');
      return;
    }
    this.scene = candidate;
    this.sceneText = text;
    this.diagnostic = null;
    if (release) {
      this.ghost = null;
    }
    this.emit('scene');
    await this.retrace();
  }

  async startOptimization(budget: number, seed: number): Promise<boolean> {
    const result = await this.transport.startOptimize(budget, seed);
    if (!result.ok) {
      this.jobError = result.error;
      this.jobStatus = result.status === 409 ? this.jobStatus : 'failed';
      this.emit('job');
      return false;
    }
    this.jobId = result.jobId;
    this.jobStatus = 'running';
    this.jobHistory = [];
    this.jobBestConfig = null;
    this.jobError = null;
    this.emit('job');
    return true;
  }

  async pollOptimization(): Promise<void> {
    if (!this.jobId) return;
    const result = await this.transport.pollJob(this.jobId);
    if (!result.ok) {
      this.jobError = result.error;
      this.jobStatus = 'failed';
      this.emit('job');
      return;
    }
    const job = result.job;
    this.jobHistory = job.history.map((h) => ({ evaluation: h.evaluation, score: h.score }));
    if (job.status === 'done') {
      this.jobStatus = 'done';
      this.jobBestConfig = job.best_config ?? null;
    } else if (job.status === 'failed') {
      this.jobStatus = 'failed';
      this.jobError = job.error ?? 'optimization failed';
    }
    this.emit('job');
  }

  /** Replace the scene with the finished job's best config and retrace. */
  async adoptResult(): Promise<boolean> {
    if (this.jobStatus !== 'done' || !this.jobBestConfig) return false;
    this.putRequests += 1;
    const result = await this.transport.putScene(this.jobBestConfig);
    if (!result.ok) {
      this.diagnostic = result.error;
      this.emit('diagnostic');
      return false;
    }
    this.sceneText = this.jobBestConfig;
    this.scene = JSON.parse(this.jobBestConfig) as SceneConfig;
    this.emit('scene');
    await this.retrace();
    return true;
  }

  /** Best-so-far score curve; non-decreasing by construction. */
  runningBest(): number[] {
    const out: number[] = [];
    let best = -Infinity;
    for (const h of this.jobHistory) {
      best = Math.max(best, h.score);
      out.push(best);
    }
    return out;
  }
}
