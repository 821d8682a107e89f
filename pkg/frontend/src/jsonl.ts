import { RadicalWindow, SegmentsRecord, TrialBundle } from './types.js';

export const BUNDLE_VERSION = 1;

// Format a float the way CPython's repr does, so files written here are
// byte-identical to files written by the pipeline.  Scientific notation
// kicks in at |x| >= 1e16 or 0 < |x| < 1e-4, the exponent is signed and
// padded to two digits, and integral values keep a trailing ".0".  In the
// shortest-round-trip range JS String() and Python repr agree digit for
// digit, so only the edges need handling.
export function pyFloat(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error('non-finite value has no float form');
  }
  if (Object.is(value, -0)) {
    return '-0.0';
  }
  const abs = Math.abs(value);
  if (abs !== 0 && (abs < 1e-4 || abs >= 1e16)) {
    const [mantissa, exponent] = value.toExponential().split('e');
    const sign = exponent[0];
    const digits = exponent.slice(1);
    return `${mantissa}e${sign}${digits.length < 2 ? '0' + digits : digits}`;
  }
  if (Number.isInteger(value)) {
    return `${value}.0`;
  }
  return String(value);
}

function pyInt(value: number): string {
  if (!Number.isInteger(value)) {
    throw new Error(`expected an integer, got ${value}`);
  }
  return String(value);
}

function asNumber(raw: Record<string, unknown>, key: string): number {
  const value = raw[key];
  if (typeof value !== 'number') {
    throw new Error(`field ${key} must be a number`);
  }
  return value;
}

function asString(raw: Record<string, unknown>, key: string): string {
  const value = raw[key];
  if (typeof value !== 'string') {
    throw new Error(`field ${key} must be a string`);
  }
  return value;
}

function asNumberArray(value: unknown, where: string): number[] {
  if (!Array.isArray(value) || value.some((v) => typeof v !== 'number')) {
    throw new Error(`${where} must be an array of numbers`);
  }
  return value as number[];
}

function parseTrialObject(raw: Record<string, unknown>): TrialBundle {
  const samplesRaw = raw['samples'];
  if (typeof samplesRaw !== 'object' || samplesRaw === null) {
    throw new Error('field samples must be an object');
  }
  const samplesRec = samplesRaw as Record<string, unknown>;
  const samples = {
    t: asNumberArray(samplesRec['t'], 'samples.t'),
    x: asNumberArray(samplesRec['x'], 'samples.x'),
    y: asNumberArray(samplesRec['y'], 'samples.y'),
    p: asNumberArray(samplesRec['p'], 'samples.p'),
  };
  const n = samples.t.length;
  if (samples.x.length !== n || samples.y.length !== n || samples.p.length !== n) {
    throw new Error('sample arrays must share one length');
  }

  const strokesRaw = raw['strokes'];
  if (!Array.isArray(strokesRaw)) {
    throw new Error('field strokes must be an array');
  }
  const strokes = strokesRaw.map((item) => {
    const rec = item as Record<string, unknown>;
    return {
      first: asNumber(rec, 'first'),
      last: asNumber(rec, 'last'),
      continued: rec['continued'] === true,
    };
  });

  const radicalsRaw = raw['radicals'];
  if (!Array.isArray(radicalsRaw)) {
    throw new Error('field radicals must be an array');
  }
  const radicals: RadicalWindow[] = radicalsRaw.map((item) => {
    const rec = item as Record<string, unknown>;
    return {
      label: asString(rec, 'label'),
      tStart: asNumber(rec, 't_start'),
      tEnd: asNumber(rec, 't_end'),
    };
  });

  return {
    subject: asString(raw, 'subject'),
    trialId: asNumber(raw, 'trial_id'),
    rowIndex: asNumber(raw, 'row_index'),
    target: asString(raw, 'target'),
    selfReport: asNumber(raw, 'self_report'),
    audOnset: asNumber(raw, 'aud_onset'),
    audOffset: asNumber(raw, 'aud_offset'),
    trialStart: asNumber(raw, 'trial_start'),
    trialEnd: asNumber(raw, 'trial_end'),
    revised: raw['revised'] === true,
    lpmm: asNumber(raw, 'lpmm'),
    samples,
    strokes,
    radicals,
  };
}

// Parse a .trials.jsonl file.  Any defect aborts the load with an error
// naming the offending line; no partial result escapes.
export function parseTrialsJsonl(text: string): TrialBundle[] {
  const bundles: TrialBundle[] = [];
  const lines = text.split('\n');
  for (let i = 0; i < lines.length; i += 1) {
    const line = lines[i].trim();
    if (line === '') {
      continue;
    }
    const lineNo = i + 1;
    let raw: unknown;
    try {
      raw = JSON.parse(line);
    } catch (err) {
      const msg = err instanceof Error ? err.message : String(err);
      throw new Error(`line ${lineNo}: not valid JSON (${msg})`);
    }
    if (typeof raw !== 'object' || raw === null || Array.isArray(raw)) {
      throw new Error(`line ${lineNo}: record must be a JSON object`);
    }
    const rec = raw as Record<string, unknown>;
    if (rec['v'] !== BUNDLE_VERSION) {
      throw new Error(`line ${lineNo}: unsupported bundle version ${JSON.stringify(rec['v'])}`);
    }
    try {
      bundles.push(parseTrialObject(rec));
    } catch (err) {
      const msg = err instanceof Error ? err.message : String(err);
      throw new Error(`line ${lineNo}: ${msg}`);
    }
  }
  return bundles;
}

// Parse a .segments.jsonl file back into records, with the same per-line
// error style as the trials parser.
export function parseSegmentsJsonl(text: string): SegmentsRecord[] {
  const records: SegmentsRecord[] = [];
  const lines = text.split('\n');
  for (let i = 0; i < lines.length; i += 1) {
    const line = lines[i].trim();
    if (line === '') {
      continue;
    }
    const lineNo = i + 1;
    let raw: unknown;
    try {
      raw = JSON.parse(line);
    } catch (err) {
      const msg = err instanceof Error ? err.message : String(err);
      throw new Error(`line ${lineNo}: not valid JSON (${msg})`);
    }
    if (typeof raw !== 'object' || raw === null || Array.isArray(raw)) {
      throw new Error(`line ${lineNo}: record must be a JSON object`);
    }
    const rec = raw as Record<string, unknown>;
    if (rec['v'] !== BUNDLE_VERSION) {
      throw new Error(`line ${lineNo}: unsupported bundle version ${JSON.stringify(rec['v'])}`);
    }
    try {
      const radicalsRaw = rec['radicals'];
      if (!Array.isArray(radicalsRaw)) {
        throw new Error('field radicals must be an array');
      }
      records.push({
        subject: asString(rec, 'subject'),
        trialId: asNumber(rec, 'trial_id'),
        radicals: radicalsRaw.map((item) => {
          const w = item as Record<string, unknown>;
          return {
            label: asString(w, 'label'),
            tStart: asNumber(w, 't_start'),
            tEnd: asNumber(w, 't_end'),
          };
        }),
        strokeOnsets: asNumberArray(rec['stroke_onsets'], 'stroke_onsets'),
      });
    } catch (err) {
      const msg = err instanceof Error ? err.message : String(err);
      throw new Error(`line ${lineNo}: ${msg}`);
    }
  }
  return records;
}

function windowJson(window: RadicalWindow): string {
  const label = JSON.stringify(window.label);
  return `{"label":${label},"t_start":${pyFloat(window.tStart)},"t_end":${pyFloat(window.tEnd)}}`;
}

function recordLine(record: SegmentsRecord): string {
  const subject = JSON.stringify(record.subject);
  const radicals = record.radicals.map(windowJson).join(',');
  const onsets = record.strokeOnsets.map(pyFloat).join(',');
  return (
    `{"v":${BUNDLE_VERSION},"subject":${subject},"trial_id":${pyInt(record.trialId)},` +
    `"radicals":[${radicals}],"stroke_onsets":[${onsets}]}`
  );
}

// Serialize segment records to the .segments.jsonl exchange format.  The
// lines are assembled by hand rather than via JSON.stringify so float
// fields match the pipeline's output byte for byte.
export function serializeSegmentsJsonl(records: SegmentsRecord[]): string {
  const ordered = [...records].sort((a, b) => {
    if (a.subject < b.subject) return -1;
    if (a.subject > b.subject) return 1;
    return a.trialId - b.trialId;
  });
  return ordered.map((record) => recordLine(record) + '\n').join('');
}
