// View models for the map layer: one marker per located result.

import type { ResultItem } from './types.js'

export const POPUP_TEXT_LIMIT = 280

export interface MarkerPopup {
  text: string
  names: string[]
  statuses: string[]
  address: string | null
}

export interface MapMarkerView {
  tweetId: string
  lat: number
  lon: number
  popup: MarkerPopup
}

export function popupText(text: string): string {
  if (text.length <= POPUP_TEXT_LIMIT) return text
  return text.slice(0, POPUP_TEXT_LIMIT) + '…'
}

export function buildMarkers(items: ResultItem[]): MapMarkerView[] {
  const markers: MapMarkerView[] = []
  for (const item of items) {
    if (item.stage !== 'located') continue
    const point = item.outcome?.point
    if (!point) continue
    markers.push({
      tweetId: item.tweet_id,
      lat: point.lat,
      lon: point.lon,
      popup: {
        text: popupText(item.text),
        names: item.spans.filter((s) => s.tag === 'PER').map((s) => s.surface),
        statuses: item.spans.filter((s) => s.tag === 'STATUS').map((s) => s.surface),
        address: item.normalized_address,
      },
    })
  }
  return markers
}
