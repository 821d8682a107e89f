export interface Samples {
  t: number[];
  x: number[];
  y: number[];
  p: number[];
}

export interface StrokeSpan {
  first: number;
  last: number;
  continued: boolean;
}

export interface RadicalWindow {
  label: string;
  tStart: number;
  tEnd: number;
}

export interface TrialBundle {
  subject: string;
  trialId: number;
  rowIndex: number;
  target: string;
  selfReport: number;
  audOnset: number;
  audOffset: number;
  trialStart: number;
  trialEnd: number;
  revised: boolean;
  lpmm: number;
  samples: Samples;
  strokes: StrokeSpan[];
  radicals: RadicalWindow[];
}

export interface SegmentsRecord {
  subject: string;
  trialId: number;
  radicals: RadicalWindow[];
  strokeOnsets: number[];
}

export function strokeOnset(bundle: TrialBundle, index: number): number {
  return bundle.samples.t[bundle.strokes[index].first];
}

export function strokeOffset(bundle: TrialBundle, index: number): number {
  return bundle.samples.t[bundle.strokes[index].last];
}
