import { RadicalWindow, SegmentsRecord } from './types.js';

export interface SpanProblem {
  subject: string;
  trialId: number;
  message: string;
}

// True when two windows share more than a boundary point.  Windows are
// compared in (tStart, tEnd) order; touching endpoints are legal.
export function hasInteriorOverlap(windows: RadicalWindow[]): boolean {
  const ordered = [...windows].sort((a, b) => a.tStart - b.tStart || a.tEnd - b.tEnd);
  for (let i = 1; i < ordered.length; i += 1) {
    if (ordered[i].tStart < ordered[i - 1].tEnd) {
      return true;
    }
  }
  return false;
}

export function uncoveredOnsets(windows: RadicalWindow[], onsets: number[]): number[] {
  if (windows.length === 0) {
    return [];
  }
  const free: number[] = [];
  onsets.forEach((onset, index) => {
    const hit = windows.some((w) => w.tStart <= onset && onset <= w.tEnd);
    if (!hit) {
      free.push(index);
    }
  });
  return free;
}

// Mirror of the pipeline's import checks: overlapping radical windows and
// stroke onsets outside every window are the two ways a segments file can
// be rejected.  The editor runs this before saving so it never writes a
// file the pipeline refuses.
export function validateRecords(records: SegmentsRecord[]): SpanProblem[] {
  const problems: SpanProblem[] = [];
  for (const record of records) {
    if (hasInteriorOverlap(record.radicals)) {
      problems.push({
        subject: record.subject,
        trialId: record.trialId,
        message: 'radical windows overlap',
      });
      continue;
    }
    const free = uncoveredOnsets(record.radicals, record.strokeOnsets);
    for (const index of free) {
      problems.push({
        subject: record.subject,
        trialId: record.trialId,
        message: `stroke ${index} starts outside every radical window`,
      });
    }
  }
  return problems;
}
