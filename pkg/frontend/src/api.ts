/**
 * Wire types and transport for the fingertrace design service.
 * All numbers displayed anywhere in the UI originate from these responses.
 */

export interface SceneCamera {
  pinhole: [number, number];
  boresight: [number, number];
  fov_deg: number;
  pixel_count: number;
}

export interface ShapeSpec {
  type: 'bspline' | 'segment' | 'arc';
  degree?: number;
  control_points?: [number, number][];
  knots?: number[] | null;
  p0?: [number, number];
  p1?: [number, number];
  center?: [number, number];
  radius?: number;
  start_angle_deg?: number;
  span_deg?: number;
}

export interface SurfaceSpec {
  kind: 'reflective' | 'refractive' | 'absorbing';
  name: string;
  shape: ShapeSpec;
  n_front?: number;
  n_back?: number;
}

export interface SceneConfig {
  units: string;
  camera: SceneCamera;
  gel: {
    refractive_index: number;
    dome_center: [number, number] | null;
    dome_radius: number | null;
  };
  surfaces: SurfaceSpec[];
  skin: ShapeSpec;
  envelope: { length_mm: number; width_mm: number };
}

export interface TraceSummary {
  coverage: number;
  min_imaging_angle_deg: number;
  pixel_count: number;
  skin_hit_fraction: number;
  skin_arc_length_mm: number;
}

export interface RayPath {
  pixel_index: number;
  terminal: 'skin_hit' | 'escaped' | 'absorbed' | 'tir' | 'max_bounces';
  points: [number, number][];
}

export interface SurfaceDrawing {
  name: string;
  kind: string;
  points: [number, number][];
  control_points: [number, number][] | null;
  movable: boolean;
}

export interface TraceResponse {
  metrics_csv: string;
  summary: TraceSummary;
  rays: RayPath[];
  surfaces: SurfaceDrawing[];
  skin: SurfaceDrawing;
  camera: { pinhole: [number, number] };
  envelope: [number, number];
  fixed_mask: boolean[];
}

export interface JobHistoryRow {
  evaluation: number;
  score: number;
  coverage: number;
  minAngleDeg: number;
}

export interface JobResponse {
  job_id: string;
  status: 'running' | 'done' | 'failed';
  history: JobHistoryRow[];
  best_config?: string;
  initial_score?: number;
  final_score?: number;
  error?: string;
}

export type PutSceneResult =
  | { ok: true }
  | { ok: false; status: number; error: string; field?: string };

export type StartOptimizeResult =
  | { ok: true; jobId: string }
  | { ok: false; status: number; error: string };

export type PollJobResult =
  | { ok: true; job: JobResponse }
  | { ok: false; status: number; error: string };

/** Everything the editor needs from the backend; mocked in tests. */
export interface Transport {
  getScene(): Promise<string>;
  putScene(configText: string): Promise<PutSceneResult>;
  postTrace(): Promise<TraceResponse>;
  startOptimize(budget: number, seed: number): Promise<StartOptimizeResult>;
  pollJob(jobId: string): Promise<PollJobResult>;
}

interface RawJob {
  job_id: string;
  status: 'running' | 'done' | 'failed';
  history: [number, number, number, number][];
  best_config?: string;
  initial_score?: number;
  final_score?: number;
  error?: string;
}

const jsonHeaders = { 'Content-Type': 'application/json' };

export class HttpTransport implements Transport {
  constructor(private readonly baseUrl: string) {}

  async getScene(): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/api/scene`);
    if (!resp.ok) throw new Error(`GET /api/scene failed with ${resp.status}`);
    return resp.text();
  }

  async putScene(configText: string): Promise<PutSceneResult> {
    const resp = await fetch(`${this.baseUrl}/api/scene`, {
      method: 'PUT',
      headers: jsonHeaders,
      body: configText,
    });
    if (resp.ok) return { ok: true };
    const body = await resp.json().catch(() => ({ error: `status ${resp.status}` }));
    return { ok: false, status: resp.status, error: body.error ?? '', field: body.field };
  }

  async postTrace(): Promise<TraceResponse> {
    const resp = await fetch(`${this.baseUrl}/api/trace`, { method: 'POST' });
    if (!resp.ok) throw new Error(`POST /api/trace failed with ${resp.status}`);
    return (await resp.json()) as TraceResponse;
  }

  async startOptimize(budget: number, seed: number): Promise<StartOptimizeResult> {
    const resp = await fetch(`${this.baseUrl}/api/optimize`, {
      method: 'POST',
      headers: jsonHeaders,
      body: JSON.stringify({ budget, seed }),
    });
    const body = await resp.json().catch(() => ({}));
    if (resp.ok) return { ok: true, jobId: body.job_id };
    return { ok: false, status: resp.status, error: body.error ?? '' };
  }

  async pollJob(jobId: string): Promise<PollJobResult> {
    const resp = await fetch(`${this.baseUrl}/api/optimize/${jobId}`);
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) return { ok: false, status: resp.status, error: body.error ?? '' };
    const raw = body as RawJob;
    return {
      ok: true,
      job: {
        ...raw,
        history: raw.history.map(([evaluation, score, coverage, minAngleDeg]) => ({
          evaluation,
          score,
          coverage,
          minAngleDeg,
        })),
      },
    };
  }
}
