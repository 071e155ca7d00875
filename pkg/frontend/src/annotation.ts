// Draft state for the annotation screen. All invariants the server enforces
// are checked here first so an annotator gets immediate feedback: spans stay
// disjoint, offsets index the tweet text exactly, and a not-call-for-help
// label cannot carry spans. Offsets are Unicode code points, matching the
// wire format (NOT UTF-16 indices — they differ once a tweet has an emoji).

import { codePointLength, codePointSlice } from './unicode.js'
import type { AnnotationDto, EntityTag, HelpLabelValue, SpanDto } from './types.js'

export type DraftOutcome = { ok: true } | { ok: false; reason: string }

export class AnnotationDraft {
  spans: SpanDto[] = []
  label: HelpLabelValue | null = null
  dirty = false
  private readonly length: number

  constructor(
    readonly tweetId: string,
    readonly text: string,
  ) {
    this.length = codePointLength(text)
  }

  addSpan(start: number, end: number, tag: EntityTag): DraftOutcome {
    if (!(start >= 0 && start < end && end <= this.length)) {
      return { ok: false, reason: 'selection is outside the tweet text' }
    }
    for (const span of this.spans) {
      if (start < span.end && span.start < end) {
        return { ok: false, reason: `overlaps existing ${span.tag} highlight` }
      }
    }
    const surface = codePointSlice(this.text, start, end)
    this.spans.push({ tag, start, end, surface })
    this.spans.sort((a, b) => a.start - b.start)
    this.dirty = true
    return { ok: true }
  }

  /** "None": remove any highlight overlapping the selection (or cursor). */
  clearRange(start: number, end: number = start + 1): boolean {
    const before = this.spans.length
    this.spans = this.spans.filter((s) => !(start < s.end && s.start < end))
    if (this.spans.length !== before) {
      this.dirty = true
      return true
    }
    return false
  }

  setLabel(label: HelpLabelValue): void {
    if (this.label !== label) {
      this.label = label
      this.dirty = true
    }
  }

  canSubmit(): DraftOutcome {
    if (this.label === null) {
      return { ok: false, reason: 'choose a label first' }
    }
    if (this.label === 'not_call_for_help' && this.spans.length > 0) {
      return { ok: false, reason: 'a not-call-for-help tweet cannot keep highlights' }
    }
    return { ok: true }
  }

  toRecord(annotator: string): AnnotationDto {
    const check = this.canSubmit()
    if (!check.ok) throw new Error(check.reason)
    return {
      tweet_id: this.tweetId,
      label: this.label as HelpLabelValue,
      spans: [...this.spans],
      annotator,
    }
  }

  markSaved(): void {
    this.dirty = false
  }
}
