import {
  AnnotationSession,
  EditResult,
  clearWindows,
  goToTrial,
  groupStrokes,
  mergeWindows,
  redo,
  splitAt,
  undo,
} from './session.js';
import { strokeOffset, strokeOnset } from './types.js';

// Scripted edit sequences.  The fixed plan and the seeded random driver are
// shared between the test suite and the fixture export script so both sides
// replay exactly the same sessions.

function must(result: EditResult, what: string): void {
  if (!result.ok) {
    throw new Error(`${what}: ${result.reason}`);
  }
}

function trialIndexById(session: AnnotationSession, trialId: number): number {
  const index = session.trials.findIndex((s) => s.bundle.trialId === trialId);
  if (index < 0) {
    throw new Error(`no trial with id ${trialId}`);
  }
  return index;
}

// Fixed plan over the golden bundle: trial 1 is regrouped by stroke clicks
// into windows {stroke 0} and {strokes 1..3}; trial 3 is split at t=653
// against its implicit whole-trial window.  Everything else stays untouched.
export function applyScriptedPlan(session: AnnotationSession): void {
  must(goToTrial(session, trialIndexById(session, 1)), 'go to trial 1');
  must(clearWindows(session), 'clear trial 1');
  must(groupStrokes(session, 0, 0), 'group stroke 0');
  must(groupStrokes(session, 1, 3), 'group strokes 1..3');

  must(goToTrial(session, trialIndexById(session, 3)), 'go to trial 3');
  must(splitAt(session, 653.0), 'split trial 3');
}

// Deterministic PRNG so fuzzed sessions replay identically everywhere.
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

// Drive a session through `steps` random edit attempts.  Rejected edits are
// part of the exercise: they must leave the session untouched, and whatever
// state remains at the end must still export cleanly.
export function randomEdits(session: AnnotationSession, rng: () => number, steps: number): void {
  for (let step = 0; step < steps; step += 1) {
    const trial = Math.floor(rng() * session.trials.length);
    goToTrial(session, trial);
    const state = session.trials[trial];
    const strokes = state.bundle.strokes.length;
    const op = Math.floor(rng() * 6);
    if (op === 0 && strokes > 0) {
      const first = Math.floor(rng() * strokes);
      const last = first + Math.floor(rng() * (strokes - first));
      groupStrokes(session, first, last);
    } else if (op === 1 && strokes > 0) {
      const lo = strokeOnset(state.bundle, 0);
      const hi = strokeOffset(state.bundle, strokes - 1);
      splitAt(session, lo + rng() * (hi - lo));
    } else if (op === 2) {
      mergeWindows(session, Math.floor(rng() * (state.windows.length + 1)));
    } else if (op === 3) {
      clearWindows(session);
    } else if (op === 4) {
      undo(session);
    } else if (op === 5) {
      redo(session);
    }
  }
}
