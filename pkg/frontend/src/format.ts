/**
 * Metrics panel view model: raw server values plus display strings.
 * The raw fields are passed through verbatim so tests can assert the
 * panel shows exactly what the server reported.
 */

import type { TraceResponse } from './api.js';

export interface PanelModel {
  coverage: number;
  minImagingAngleDeg: number;
  skinHitFraction: number;
  skinArcLengthMm: number;
  pixelCount: number;
  coverageText: string;
  minAngleText: string;
  hitText: string;
  blindZoneWarning: boolean;
  resolutionSparkline: [number, number][];
}

/** px/mm per skin hit parsed straight out of the server's metrics table. */
export function resolutionFromCsv(metricsCsv: string): [number, number][] {
  const lines = metricsCsv.trim().split('\n');
  const out: [number, number][] = [];
  for (const line of lines.slice(1)) {
    const [, arc, , pxmm] = line.split(',');
    const s = Number(arc);
    const r = Number(pxmm);
    if (Number.isFinite(s) && Number.isFinite(r)) out.push([s, r]);
  }
  out.sort((a, b) => a[0] - b[0]);
  return out;
}

export function panelModel(trace: TraceResponse): PanelModel {
  const s = trace.summary;
  return {
    coverage: s.coverage,
    minImagingAngleDeg: s.min_imaging_angle_deg,
    skinHitFraction: s.skin_hit_fraction,
    skinArcLengthMm: s.skin_arc_length_mm,
    pixelCount: s.pixel_count,
    coverageText: `coverage ${s.coverage.toFixed(3)}`,
    minAngleText: `min imaging angle ${s.min_imaging_angle_deg.toFixed(1)}°`,
    hitText: `${(100 * s.skin_hit_fraction).toFixed(1)}% of pixels reach the skin`,
    blindZoneWarning: s.coverage === 0.0,
    resolutionSparkline: resolutionFromCsv(trace.metrics_csv),
  };
}
