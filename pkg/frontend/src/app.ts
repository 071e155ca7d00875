// Page wiring: map + filters, the unlocated investigation list, and the
// annotation screen. All data comes from the documented /api/v1 endpoints;
// filter state round-trips through the URL query string.

import { ApiClient, ApiError } from './api.js'
import { AnnotationDraft } from './annotation.js'
import { buildMarkers } from './markers.js'
import { TileMap } from './map.js'
import { decodeFilters, encodeFilters, type FilterState } from './urlstate.js'
import { codePointLength, codePointSlice, utf16ToCodePoint } from './unicode.js'
import type { EntityTag, ResultItem, TweetDetail, UiConfig } from './types.js'

const api = new ApiClient('')

const PAGE_SIZE = 25

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

function showBanner(message: string | null): void {
  const banner = el<HTMLDivElement>('error-banner')
  if (message) {
    banner.textContent = message
    banner.classList.remove('hidden')
  } else {
    banner.classList.add('hidden')
  }
}

// --- map tab ---------------------------------------------------------------

let map: TileMap
let mapAbort: AbortController | null = null

async function refreshMap(state: FilterState): Promise<void> {
  mapAbort?.abort()
  const abort = new AbortController()
  mapAbort = abort
  try {
    const page = await api.results(
      { ...state, stage: 'located', limit: 500 },
      abort.signal,
    )
    if (abort.signal.aborted) return
    const markers = buildMarkers(page.items)
    map.setMarkers(markers)
    el('marker-count').textContent = `${markers.length} located`
    el('no-matches').classList.toggle('hidden', markers.length > 0)
    showBanner(null)
  } catch (err) {
    if ((err as Error).name === 'AbortError') return
    showBanner(`could not load results: ${(err as Error).message}`)
  }
}

async function refreshCombos(state: FilterState): Promise<void> {
  const payload = await api.filters()
  fillSelect(el<HTMLSelectElement>('name-filter'), payload.names, state.name)
  fillSelect(el<HTMLSelectElement>('status-filter'), payload.statuses, state.status)
}

function fillSelect(select: HTMLSelectElement, values: string[], current?: string): void {
  select.replaceChildren()
  const blank = document.createElement('option')
  blank.value = ''
  blank.textContent = '(any)'
  select.append(blank)
  for (const value of values) {
    const option = document.createElement('option')
    option.value = value
    option.textContent = value
    select.append(option)
  }
  select.value = current && values.includes(current) ? current : ''
}

function currentFilters(): FilterState {
  return decodeFilters(window.location.search)
}

function applyFilters(state: FilterState): void {
  history.replaceState(null, '', window.location.pathname + encodeFilters(state))
  void refreshMap(state)
}

// --- unlocated list ---------------------------------------------------------

let listOffset = 0

async function refreshList(): Promise<void> {
  const stage = el<HTMLSelectElement>('list-stage').value
  try {
    const page = await api.results({ stage, limit: PAGE_SIZE, offset: listOffset })
    const container = el<HTMLDivElement>('unlocated-list')
    container.replaceChildren()
    if (page.items.length === 0) {
      const empty = document.createElement('p')
      empty.className = 'empty-note'
      empty.textContent = 'no unlocated tweets'
      container.append(empty)
    }
    for (const item of page.items) {
      container.append(renderListEntry(item))
    }
    el('list-pos').textContent =
      `${Math.min(listOffset + 1, page.total)}–${Math.min(listOffset + PAGE_SIZE, page.total)} of ${page.total}`
    ;(el<HTMLButtonElement>('list-prev')).disabled = listOffset === 0
    ;(el<HTMLButtonElement>('list-next')).disabled = listOffset + PAGE_SIZE >= page.total
    showBanner(null)
  } catch (err) {
    showBanner(`could not load list: ${(err as Error).message}`)
  }
}

function renderListEntry(item: ResultItem): HTMLElement {
  const entry = document.createElement('div')
  entry.className = 'list-entry'
  const text = document.createElement('p')
  text.textContent = item.text
  entry.append(text)
  const meta = document.createElement('p')
  meta.className = 'entry-meta'
  const spans = item.spans.map((s) => `${s.tag}:${s.surface}`).join(' | ')
  const parts = [`stage: ${item.stage}`]
  if (spans) parts.push(spans)
  if (item.outcome?.kind === 'provider_error' && item.outcome.message) {
    parts.push(`geocode error: ${item.outcome.message}`)
  }
  meta.textContent = parts.join(' · ')
  entry.append(meta)
  const annotate = document.createElement('button')
  annotate.textContent = 'annotate'
  annotate.addEventListener('click', () => {
    void openAnnotation(item.tweet_id)
    switchTab('annotate')
  })
  entry.append(annotate)
  return entry
}

// --- annotation tab ----------------------------------------------------------

let draft: AnnotationDraft | null = null

async function openAnnotation(tweetId: string): Promise<void> {
  try {
    const detail: TweetDetail = await api.tweet(tweetId)
    draft = new AnnotationDraft(detail.tweet.id, detail.tweet.text)
    const mine = detail.annotations.find((a) => a.annotator === annotatorName())
    if (mine) {
      draft.label = mine.label
      draft.spans = [...mine.spans]
    }
    el<HTMLInputElement>('annotate-id').value = tweetId
    renderDraft()
    setAnnotationNote('')
  } catch (err) {
    setAnnotationNote(
      err instanceof ApiError && err.status === 404
        ? `tweet ${tweetId} is not in the store`
        : `could not load tweet: ${(err as Error).message}`,
    )
  }
}

function annotatorName(): string {
  return el<HTMLInputElement>('annotator').value.trim() || 'operator'
}

function setAnnotationNote(message: string): void {
  el('annotate-note').textContent = message
}

function renderDraft(): void {
  const container = el<HTMLDivElement>('annotate-text')
  container.replaceChildren()
  if (!draft) return
  const total = codePointLength(draft.text)
  let cursor = 0
  for (const span of draft.spans) {
    if (span.start > cursor) {
      container.append(document.createTextNode(codePointSlice(draft.text, cursor, span.start)))
    }
    const mark = document.createElement('mark')
    mark.className = `tag-${span.tag}`
    mark.textContent = codePointSlice(draft.text, span.start, span.end)
    mark.dataset.tag = span.tag
    container.append(mark)
    cursor = span.end
  }
  if (cursor < total) {
    container.append(document.createTextNode(codePointSlice(draft.text, cursor, total)))
  }
  for (const value of ['call_for_help', 'not_call_for_help'] as const) {
    el(`label-${value}`).classList.toggle('active', draft.label === value)
  }
  el('dirty-flag').classList.toggle('hidden', !draft.dirty)
}

/** Code-point offsets of the current selection inside #annotate-text. */
function selectionOffsets(): { start: number; end: number } | null {
  if (!draft) return null
  const container = el<HTMLDivElement>('annotate-text')
  const selection = window.getSelection()
  if (!selection || selection.rangeCount === 0) return null
  const range = selection.getRangeAt(0)
  if (!container.contains(range.startContainer) || !container.contains(range.endContainer)) {
    return null
  }
  // measure in UTF-16 units across the text nodes, then convert
  const measure = (node: Node, offset: number): number => {
    let total = 0
    const walker = document.createTreeWalker(container, NodeFilter.SHOW_TEXT)
    while (walker.nextNode()) {
      const current = walker.currentNode
      if (current === node) return total + offset
      total += (current.textContent ?? '').length
    }
    // offset given against an element (e.g. triple-click): count child text
    return total
  }
  const start = utf16ToCodePoint(draft.text, measure(range.startContainer, range.startOffset))
  const end = utf16ToCodePoint(draft.text, measure(range.endContainer, range.endOffset))
  return start === end ? { start, end: end + 1 } : { start: Math.min(start, end), end: Math.max(start, end) }
}

function tagSelection(tag: EntityTag): void {
  if (!draft) return
  const offsets = selectionOffsets()
  if (!offsets) {
    setAnnotationNote('select some text first')
    return
  }
  const result = draft.addSpan(offsets.start, offsets.end, tag)
  if (!result.ok) {
    setAnnotationNote(result.reason)
    el('annotate-text').classList.add('flash-error')
    setTimeout(() => el('annotate-text').classList.remove('flash-error'), 400)
    return
  }
  setAnnotationNote('')
  renderDraft()
}

function clearSelection(): void {
  if (!draft) return
  const offsets = selectionOffsets()
  if (!offsets) {
    setAnnotationNote('select a highlight to clear')
    return
  }
  if (draft.clearRange(offsets.start, offsets.end)) {
    setAnnotationNote('')
    renderDraft()
  } else {
    setAnnotationNote('no highlight under the selection')
  }
}

async function submitDraft(): Promise<void> {
  if (!draft) return
  const check = draft.canSubmit()
  if (!check.ok) {
    setAnnotationNote(check.reason)
    return
  }
  try {
    await api.saveAnnotation(draft.toRecord(annotatorName()))
    draft.markSaved()
    renderDraft()
    setAnnotationNote('saved')
  } catch (err) {
    // a 422 keeps the draft so nothing the annotator did is lost
    setAnnotationNote(
      err instanceof ApiError ? `rejected (${err.status}): ${err.message}` : String(err),
    )
  }
}

// --- stats + tabs -------------------------------------------------------------

async function refreshStats(): Promise<void> {
  try {
    const stats = await api.stats()
    el('stats-line').textContent =
      `ingested ${stats.ingested} · negative ${stats.classified_negative} · ` +
      `tag-failed ${stats.tag_failed} · located ${stats.located} · ` +
      `unlocated ${stats.unlocated} · filtered ${stats.filtered}`
  } catch {
    // stats are decorative; the banner stays reserved for the active view
  }
}

function switchTab(name: string): void {
  for (const tab of ['map', 'unlocated', 'annotate']) {
    el(`tab-${tab}`).classList.toggle('active', tab === name)
    el(`panel-${tab}`).classList.toggle('hidden', tab !== name)
  }
}

async function init(): Promise<void> {
  let config: UiConfig
  try {
    config = await api.config()
  } catch (err) {
    showBanner(`could not load /config.json: ${(err as Error).message}`)
    return
  }
  map = new TileMap(el('map'), config.tile_url)
  map.fitBounds(config.bbox)

  const state = currentFilters()
  await refreshCombos(state).catch(() => showBanner('could not load filters'))
  await refreshMap(state)
  await refreshStats()
  void refreshList()

  el<HTMLSelectElement>('name-filter').addEventListener('change', (event) => {
    const value = (event.target as HTMLSelectElement).value
    applyFilters({ ...currentFilters(), name: value || undefined })
  })
  el<HTMLSelectElement>('status-filter').addEventListener('change', (event) => {
    const value = (event.target as HTMLSelectElement).value
    applyFilters({ ...currentFilters(), status: value || undefined })
  })
  el('clear-filters').addEventListener('click', () => {
    applyFilters({})
    void refreshCombos({})
  })

  el('list-stage').addEventListener('change', () => {
    listOffset = 0
    void refreshList()
  })
  el('list-prev').addEventListener('click', () => {
    listOffset = Math.max(0, listOffset - PAGE_SIZE)
    void refreshList()
  })
  el('list-next').addEventListener('click', () => {
    listOffset += PAGE_SIZE
    void refreshList()
  })

  el('annotate-load').addEventListener('click', () => {
    void openAnnotation(el<HTMLInputElement>('annotate-id').value.trim())
  })
  for (const tag of ['PER', 'CITY', 'ADDR', 'STATUS'] as const) {
    el(`tag-${tag}`).addEventListener('click', () => tagSelection(tag))
  }
  el('tag-none').addEventListener('click', () => clearSelection())
  el('label-call_for_help').addEventListener('click', () => {
    draft?.setLabel('call_for_help')
    renderDraft()
  })
  el('label-not_call_for_help').addEventListener('click', () => {
    draft?.setLabel('not_call_for_help')
    renderDraft()
  })
  el('annotate-submit').addEventListener('click', () => void submitDraft())

  for (const tab of ['map', 'unlocated', 'annotate']) {
    el(`tab-${tab}`).addEventListener('click', () => switchTab(tab))
  }
  switchTab('map')

  const poll = Math.max(1, config.poll_interval_s) * 1000
  setInterval(() => {
    void refreshCombos(currentFilters())
    void refreshMap(currentFilters())
    void refreshStats()
  }, poll)
}

window.addEventListener('DOMContentLoaded', () => void init())
