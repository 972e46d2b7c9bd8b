// ILS wizard state: 44 a/b items, submit stays blocked until every
// item is answered. Resuming restores previously stored answers.

import type { Profile, SheetView } from './api.js';

/** The slice of the API the wizard needs; satisfied by Api. */
export interface SheetApi {
  sheet(learnerId: string): Promise<SheetView>;
}

export const ITEM_COUNT = 44;

export type Answer = 'a' | 'b';

export class WizardState {
  private answers = new Map<number, Answer>();

  constructor(initial?: Record<string, Answer>) {
    if (initial) {
      for (const [id, answer] of Object.entries(initial)) {
        this.answer(Number(id), answer);
      }
    }
  }

  answer(itemId: number, value: Answer): void {
    if (!Number.isInteger(itemId) || itemId < 1 || itemId > ITEM_COUNT) {
      throw new RangeError(`item id ${itemId} outside 1..${ITEM_COUNT}`);
    }
    if (value !== 'a' && value !== 'b') {
      throw new RangeError(`answer must be a or b, got ${String(value)}`);
    }
    this.answers.set(itemId, value);
  }

  answerOf(itemId: number): Answer | undefined {
    return this.answers.get(itemId);
  }

  get answeredCount(): number {
    return this.answers.size;
  }

  get canSubmit(): boolean {
    return this.answers.size === ITEM_COUNT;
  }

  get missingItems(): number[] {
    const missing: number[] = [];
    for (let i = 1; i <= ITEM_COUNT; i++) {
      if (!this.answers.has(i)) missing.push(i);
    }
    return missing;
  }

  toPayload(): Record<number, Answer> {
    const out: Record<number, Answer> = {};
    for (const [id, answer] of this.answers) out[id] = answer;
    return out;
  }
}

export async function resumeWizard(api: SheetApi, learnerId: string): Promise<WizardState> {
  try {
    const sheet = await api.sheet(learnerId);
    return new WizardState(sheet.answers);
  } catch {
    return new WizardState(); // nothing stored yet
  }
}

/** Bar-chart geometry for the four profile dimensions; values are the
 * API's integers, only mapped to pixel heights. */
export function profileBars(profile: Profile): { label: string; value: number; height: number }[] {
  const dims: [string, number][] = [
    ['perception', profile.dims.perception],
    ['understanding', profile.dims.understanding],
    ['processing', profile.dims.processing],
    ['input', profile.dims.input],
  ];
  return dims.map(([label, value]) => ({
    label,
    value,
    height: Math.round((Math.abs(value) / 11) * 100),
  }));
}
