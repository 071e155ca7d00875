// Filter state lives in the URL query string so views are shareable and
// survive reloads.

export interface FilterState {
  name?: string
  status?: string
}

export function encodeFilters(state: FilterState): string {
  const params = new URLSearchParams()
  if (state.name) params.set('name', state.name)
  if (state.status) params.set('status', state.status)
  const encoded = params.toString()
  return encoded ? `?${encoded}` : ''
}

export function decodeFilters(search: string): FilterState {
  const params = new URLSearchParams(
    search.startsWith('?') ? search.slice(1) : search,
  )
  const state: FilterState = {}
  const name = params.get('name')
  if (name) state.name = name
  const status = params.get('status')
  if (status) state.status = status
  return state
}
