/** Pure client-side state for the self-annotation page.
 *
 * The client model deliberately has no field for the server's estimated
 * scores: members rate themselves blind, so the model's opinion must never
 * reach this code. Rows carry only the term, its display form, the last
 * server-confirmed self score, and the edit state of the rating control.
 */

export const SCORE_MIN = 0;
export const SCORE_MAX = 100;
export const SCORE_STEP = 5;

/** Midpoint used to park the slider for unrated rows; it is display-only
 * and never submitted — an unrated row stays unrated until touched. */
export const NEUTRAL_SLIDER_POSITION = 50;

/** One row of GET /members/{uid}/skills as served to a member session. */
export interface WireSkillRow {
  term: string;
  display_term: string;
  self_score: number | null;
}

/** One skill term as the member sees and edits it. */
export interface SkillRow {
  /** Canonical key, used in submissions. */
  term: string;
  /** Original surface form, for rendering. */
  displayTerm: string;
  /** Last server-confirmed rating; null means unrated. */
  savedScore: number | null;
  /** Value currently shown in the control; null until first touched. */
  pendingScore: number | null;
  /** True when pendingScore differs from savedScore. */
  dirty: boolean;
  /** True when the last submission rejected this row. */
  invalid: boolean;
}

/** Clamp to [0, 100] and snap to the nearest multiple of 5.
 *
 * The range input's step attribute already constrains pointer input in a
 * real browser; this is the belt-and-braces guarantee that no code path —
 * keyboard entry, programmatic writes, odd browsers — can emit an
 * off-grid score.
 */
export function snapScore(value: number): number {
  if (Number.isNaN(value)) {
    return SCORE_MIN;
  }
  const clamped = Math.min(SCORE_MAX, Math.max(SCORE_MIN, value));
  return Math.round(clamped / SCORE_STEP) * SCORE_STEP;
}

/** Build rows from the wire response, alphabetical by term.
 *
 * Fields are picked explicitly: anything else a response might carry is
 * dropped on the floor here and never stored.
 */
export function toRows(wire: readonly WireSkillRow[]): SkillRow[] {
  return wire
    .map((row) => ({
      term: row.term,
      displayTerm: row.display_term,
      savedScore: row.self_score,
      pendingScore: row.self_score,
      dirty: false,
      invalid: false,
    }))
    .sort((a, b) => (a.term < b.term ? -1 : a.term > b.term ? 1 : 0));
}

/** Record a control change on one row; the value is snapped to the grid.
 *
 * Moving a row back to its saved score clears the dirty flag, so a
 * round-trip edit costs nothing on submit.
 */
export function setScore(rows: readonly SkillRow[], term: string, value: number): SkillRow[] {
  const snapped = snapScore(value);
  return rows.map((row) =>
    row.term === term
      ? { ...row, pendingScore: snapped, dirty: snapped !== row.savedScore, invalid: false }
      : row,
  );
}

export function dirtyRows(rows: readonly SkillRow[]): SkillRow[] {
  return rows.filter((row) => row.dirty && row.pendingScore !== null);
}

export function hasDirty(rows: readonly SkillRow[]): boolean {
  return dirtyRows(rows).length > 0;
}

/** POST body for /members/{uid}/skills: only the dirty rows. */
export function toPayload(rows: readonly SkillRow[]): { term: string; self_score: number }[] {
  return dirtyRows(rows).map((row) => ({
    term: row.term,
    self_score: row.pendingScore as number,
  }));
}

/** On a 200, promote the submitted rows' pending scores to saved. */
export function applySaved(rows: readonly SkillRow[], submittedTerms: readonly string[]): SkillRow[] {
  const submitted = new Set(submittedTerms);
  return rows.map((row) =>
    submitted.has(row.term)
      ? { ...row, savedScore: row.pendingScore, dirty: false, invalid: false }
      : row,
  );
}

/** On a 422 nothing was saved (the batch is atomic server-side): flag the
 * offending rows, or every dirty row when the server message does not
 * identify one. */
export function markRejected(rows: readonly SkillRow[], offendingTerms: readonly string[]): SkillRow[] {
  const flagged = offendingTerms.length
    ? new Set(offendingTerms)
    : new Set(dirtyRows(rows).map((row) => row.term));
  return rows.map((row) => (flagged.has(row.term) ? { ...row, invalid: true } : row));
}

/** Pull the offending term out of the server's 422 message, which ends
 * with the term in quoted-repr form ("... got 47 for 'python'"). */
export function termFromErrorMessage(message: string): string | null {
  const match = /for '([^']*)'\s*$/.exec(message) ?? /for "([^"]*)"\s*$/.exec(message);
  return match ? (match[1] ?? null) : null;
}

export function formatScore(score: number | null): string {
  return score === null ? "unrated" : String(score);
}
