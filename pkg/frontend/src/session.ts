import { serializeSegmentsJsonl } from './jsonl.js';
import { RadicalWindow, SegmentsRecord, TrialBundle, strokeOffset, strokeOnset } from './types.js';
import { hasInteriorOverlap, uncoveredOnsets } from './validate.js';

export interface TrialState {
  bundle: TrialBundle;
  windows: RadicalWindow[];
}

interface Snapshot {
  trial: number;
  windows: RadicalWindow[];
}

export interface AnnotationSession {
  trials: TrialState[];
  current: number;
  undoStack: Snapshot[];
  redoStack: Snapshot[];
  dirty: boolean;
}

export type EditResult = { ok: true } | { ok: false; reason: string };

function copyWindows(windows: RadicalWindow[]): RadicalWindow[] {
  return windows.map((w) => ({ label: w.label, tStart: w.tStart, tEnd: w.tEnd }));
}

export function newSession(bundles: TrialBundle[]): AnnotationSession {
  return {
    trials: bundles.map((bundle) => ({ bundle, windows: copyWindows(bundle.radicals) })),
    current: 0,
    undoStack: [],
    redoStack: [],
    dirty: false,
  };
}

export function goToTrial(session: AnnotationSession, index: number): EditResult {
  if (!Number.isInteger(index) || index < 0 || index >= session.trials.length) {
    return { ok: false, reason: `no trial at index ${index}` };
  }
  session.current = index;
  return { ok: true };
}

function currentState(session: AnnotationSession): TrialState {
  return session.trials[session.current];
}

// Relabel windows "1".."k" in time order.  Labels carry no meaning beyond
// drawing order, so every successful edit renumbers from scratch.
function renumber(windows: RadicalWindow[]): RadicalWindow[] {
  const ordered = [...windows].sort((a, b) => a.tStart - b.tStart || a.tEnd - b.tEnd);
  return ordered.map((w, i) => ({ label: String(i + 1), tStart: w.tStart, tEnd: w.tEnd }));
}

// Install edited windows for the current trial.  Overlap is rejected here,
// before any state changes, so working spans stay non-overlapping at all
// times and undo never has to repair anything.
function commit(session: AnnotationSession, windows: RadicalWindow[]): EditResult {
  if (hasInteriorOverlap(windows)) {
    return { ok: false, reason: 'radical windows would overlap' };
  }
  const state = currentState(session);
  session.undoStack.push({ trial: session.current, windows: copyWindows(state.windows) });
  session.redoStack = [];
  state.windows = renumber(windows);
  session.dirty = true;
  return { ok: true };
}

// Group strokes first..last (inclusive) into one radical window spanning
// from the onset of the first to the offset of the last.
export function groupStrokes(session: AnnotationSession, first: number, last: number): EditResult {
  const state = currentState(session);
  const count = state.bundle.strokes.length;
  if (!Number.isInteger(first) || !Number.isInteger(last) || first < 0 || last >= count || first > last) {
    return { ok: false, reason: `stroke range ${first}..${last} is out of bounds` };
  }
  const window = {
    label: '?',
    tStart: strokeOnset(state.bundle, first),
    tEnd: strokeOffset(state.bundle, last),
  };
  return commit(session, [...state.windows, window]);
}

// Split the window containing time t into two at t.  With no windows drawn
// yet the whole trial acts as one implicit window, so a first split yields
// two radicals directly.
export function splitAt(session: AnnotationSession, t: number): EditResult {
  const state = currentState(session);
  let windows = state.windows;
  if (windows.length === 0) {
    const count = state.bundle.strokes.length;
    if (count === 0) {
      return { ok: false, reason: 'trial has no strokes to split' };
    }
    windows = [
      {
        label: '1',
        tStart: strokeOnset(state.bundle, 0),
        tEnd: strokeOffset(state.bundle, count - 1),
      },
    ];
  }
  const index = windows.findIndex((w) => w.tStart < t && t < w.tEnd);
  if (index < 0) {
    return { ok: false, reason: `no window interior contains t=${t}` };
  }
  const target = windows[index];
  const replaced = [
    ...windows.slice(0, index),
    { label: '?', tStart: target.tStart, tEnd: t },
    { label: '?', tStart: t, tEnd: target.tEnd },
    ...windows.slice(index + 1),
  ];
  return commit(session, replaced);
}

// Merge the window at position index (in time order) with its successor.
export function mergeWindows(session: AnnotationSession, index: number): EditResult {
  const state = currentState(session);
  const ordered = renumber(state.windows);
  if (!Number.isInteger(index) || index < 0 || index + 1 >= ordered.length) {
    return { ok: false, reason: `no adjacent pair at index ${index}` };
  }
  const merged = {
    label: '?',
    tStart: ordered[index].tStart,
    tEnd: ordered[index + 1].tEnd,
  };
  const replaced = [...ordered.slice(0, index), merged, ...ordered.slice(index + 2)];
  return commit(session, replaced);
}

// Drop every window on the current trial; export then falls back to the
// automatic single-radical segmentation.
export function clearWindows(session: AnnotationSession): EditResult {
  return commit(session, []);
}

export function undo(session: AnnotationSession): EditResult {
  const snapshot = session.undoStack.pop();
  if (snapshot === undefined) {
    return { ok: false, reason: 'nothing to undo' };
  }
  const state = session.trials[snapshot.trial];
  session.redoStack.push({ trial: snapshot.trial, windows: copyWindows(state.windows) });
  state.windows = snapshot.windows;
  session.current = snapshot.trial;
  session.dirty = true;
  return { ok: true };
}

export function redo(session: AnnotationSession): EditResult {
  const snapshot = session.redoStack.pop();
  if (snapshot === undefined) {
    return { ok: false, reason: 'nothing to redo' };
  }
  const state = session.trials[snapshot.trial];
  session.undoStack.push({ trial: snapshot.trial, windows: copyWindows(state.windows) });
  state.windows = snapshot.windows;
  session.current = snapshot.trial;
  session.dirty = true;
  return { ok: true };
}

// Stable digest of every trial's working spans, for exactness checks on
// undo and redo.
export function sessionHash(session: AnnotationSession): string {
  return JSON.stringify(
    session.trials.map((state) => state.windows.map((w) => [w.label, w.tStart, w.tEnd])),
  );
}

export interface UnassignedStrokes {
  subject: string;
  trialId: number;
  strokes: number[];
}

export type ExportResult =
  | { ok: true; text: string }
  | { ok: false; problems: UnassignedStrokes[] };

function recordFor(state: TrialState, windows: RadicalWindow[]): SegmentsRecord {
  return {
    subject: state.bundle.subject,
    trialId: state.bundle.trialId,
    radicals: copyWindows(windows),
    strokeOnsets: state.bundle.strokes.map((_, i) => strokeOnset(state.bundle, i)),
  };
}

// Build the .segments.jsonl payload.  A trial whose windows leave some
// stroke onset uncovered would be rejected downstream, so it either blocks
// the export (default) or, once the user confirms a partial export, falls
// back to the automatic segmentation for that trial alone.
export function exportSegments(
  session: AnnotationSession,
  options: { confirmPartial?: boolean } = {},
): ExportResult {
  const problems: UnassignedStrokes[] = [];
  const records: SegmentsRecord[] = [];
  for (const state of session.trials) {
    const onsets = state.bundle.strokes.map((_, i) => strokeOnset(state.bundle, i));
    const free = uncoveredOnsets(state.windows, onsets);
    if (free.length > 0) {
      problems.push({ subject: state.bundle.subject, trialId: state.bundle.trialId, strokes: free });
      records.push(recordFor(state, []));
    } else {
      records.push(recordFor(state, state.windows));
    }
  }
  if (problems.length > 0 && options.confirmPartial !== true) {
    return { ok: false, problems };
  }
  session.dirty = false;
  return { ok: true, text: serializeSegmentsJsonl(records) };
}
