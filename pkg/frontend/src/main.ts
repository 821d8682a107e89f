import { parseTrialsJsonl } from './jsonl.js';
import { spatialSvg, timelineSvg } from './render.js';
import {
  AnnotationSession,
  clearWindows,
  exportSegments,
  goToTrial,
  groupStrokes,
  mergeWindows,
  newSession,
  redo,
  splitAt,
  undo,
} from './session.js';

let session: AnnotationSession | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function banner(message: string, kind: 'info' | 'error'): void {
  const node = el<HTMLDivElement>('banner');
  node.textContent = message;
  node.className = kind;
}

function refresh(): void {
  if (session === null) {
    return;
  }
  const state = session.trials[session.current];
  const picker = el<HTMLSelectElement>('trial');
  picker.value = String(session.current);
  el<HTMLDivElement>('timeline').innerHTML = timelineSvg(state.bundle, state.windows);
  el<HTMLDivElement>('spatial').innerHTML = spatialSvg(state.bundle, state.windows);
  const meta =
    `${state.bundle.subject} / trial ${state.bundle.trialId} / target ${state.bundle.target} / ` +
    `${state.bundle.strokes.length} strokes / ${state.windows.length} windows` +
    (session.dirty ? ' / unsaved edits' : '');
  el<HTMLDivElement>('meta').textContent = meta;
}

function loadText(text: string): void {
  let bundles;
  try {
    bundles = parseTrialsJsonl(text);
  } catch (err) {
    banner(err instanceof Error ? err.message : String(err), 'error');
    return;
  }
  if (bundles.length === 0) {
    banner('file holds no trials', 'error');
    return;
  }
  session = newSession(bundles);
  const picker = el<HTMLSelectElement>('trial');
  picker.innerHTML = '';
  bundles.forEach((bundle, i) => {
    const option = document.createElement('option');
    option.value = String(i);
    option.textContent = `${bundle.subject} #${bundle.trialId} (${bundle.target})`;
    picker.appendChild(option);
  });
  banner(`loaded ${bundles.length} trials`, 'info');
  refresh();
}

function applyEdit(run: (s: AnnotationSession) => { ok: boolean; reason?: string }): void {
  if (session === null) {
    banner('load a trials file first', 'error');
    return;
  }
  const result = run(session);
  if (!result.ok) {
    banner(result.reason ?? 'edit rejected', 'error');
    return;
  }
  banner('', 'info');
  refresh();
}

function saveSegments(): void {
  if (session === null) {
    banner('load a trials file first', 'error');
    return;
  }
  let result = exportSegments(session);
  if (!result.ok) {
    const lines = result.problems
      .map((p) => `${p.subject} trial ${p.trialId}: strokes ${p.strokes.join(', ')}`)
      .join('\n');
    const fallback = window.confirm(
      `Some strokes sit outside every radical window:\n${lines}\n\n` +
        'Export those trials with automatic segmentation instead?',
    );
    if (!fallback) {
      banner('export cancelled; some strokes are unassigned', 'error');
      return;
    }
    result = exportSegments(session, { confirmPartial: true });
    if (!result.ok) {
      banner('export failed', 'error');
      return;
    }
  }
  const blob = new Blob([result.text], { type: 'application/jsonl' });
  const anchor = document.createElement('a');
  anchor.href = URL.createObjectURL(blob);
  anchor.download = 'annotated.segments.jsonl';
  anchor.click();
  URL.revokeObjectURL(anchor.href);
  banner('segments file saved', 'info');
  refresh();
}

function wire(): void {
  el<HTMLInputElement>('file').addEventListener('change', (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (file === undefined) {
      return;
    }
    file.text().then(loadText, (err) => banner(String(err), 'error'));
  });

  el<HTMLSelectElement>('trial').addEventListener('change', (event) => {
    const value = Number((event.target as HTMLSelectElement).value);
    applyEdit((s) => goToTrial(s, value));
  });

  el<HTMLButtonElement>('group').addEventListener('click', () => {
    const first = Number(el<HTMLInputElement>('group-first').value);
    const last = Number(el<HTMLInputElement>('group-last').value);
    applyEdit((s) => groupStrokes(s, first, last));
  });

  el<HTMLButtonElement>('split').addEventListener('click', () => {
    const t = Number(el<HTMLInputElement>('split-t').value);
    applyEdit((s) => splitAt(s, t));
  });

  el<HTMLButtonElement>('merge').addEventListener('click', () => {
    const index = Number(el<HTMLInputElement>('merge-index').value);
    applyEdit((s) => mergeWindows(s, index));
  });

  el<HTMLButtonElement>('clear').addEventListener('click', () => applyEdit(clearWindows));
  el<HTMLButtonElement>('undo').addEventListener('click', () => applyEdit(undo));
  el<HTMLButtonElement>('redo').addEventListener('click', () => applyEdit(redo));
  el<HTMLButtonElement>('save').addEventListener('click', saveSegments);

  document.addEventListener('keydown', (event) => {
    if (!event.ctrlKey && !event.metaKey) {
      return;
    }
    if (event.key === 'z') {
      event.preventDefault();
      applyEdit(undo);
    } else if (event.key === 'y') {
      event.preventDefault();
      applyEdit(redo);
    }
  });
}

wire();
