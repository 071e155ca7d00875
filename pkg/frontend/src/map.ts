// A small slippy-map widget: raster tiles from a configurable URL template,
// positioned markers with popups, drag panning, and +/- zoom. No map SDK so
// the only contract is the tile template in /config.json.

import type { MapMarkerView } from './markers.js'
import type { BboxDto } from './types.js'
import {
  TILE_SIZE,
  bboxCenter,
  fitZoom,
  project,
  tileUrl,
  tilesInView,
  worldXToLon,
  worldYToLat,
  latToWorldY,
  lonToWorldX,
} from './tilemath.js'

export class TileMap {
  private centerLat = 0
  private centerLon = 0
  private zoom = 6
  private markers: MapMarkerView[] = []
  private tileLayer: HTMLDivElement
  private markerLayer: HTMLDivElement
  private popup: HTMLDivElement

  constructor(
    private readonly container: HTMLElement,
    private readonly tileTemplate: string,
  ) {
    container.classList.add('tilemap')
    this.tileLayer = document.createElement('div')
    this.tileLayer.className = 'tile-layer'
    this.markerLayer = document.createElement('div')
    this.markerLayer.className = 'marker-layer'
    this.popup = document.createElement('div')
    this.popup.className = 'map-popup hidden'
    container.append(this.tileLayer, this.markerLayer, this.popup)
    this.attachControls()
    this.attachDrag()
  }

  fitBounds(bbox: BboxDto): void {
    const { lat, lon } = bboxCenter(bbox)
    this.centerLat = lat
    this.centerLon = lon
    this.zoom = fitZoom(bbox, this.container.clientWidth || 800, this.container.clientHeight || 500)
    this.render()
  }

  setMarkers(markers: MapMarkerView[]): void {
    this.markers = markers
    this.render()
  }

  get markerCount(): number {
    return this.markers.length
  }

  private attachControls(): void {
    const controls = document.createElement('div')
    controls.className = 'map-controls'
    for (const [label, delta] of [
      ['+', 1],
      ['−', -1],
    ] as const) {
      const button = document.createElement('button')
      button.textContent = label
      button.addEventListener('click', () => {
        this.zoom = Math.max(0, Math.min(18, this.zoom + delta))
        this.render()
      })
      controls.append(button)
    }
    this.container.append(controls)
  }

  private attachDrag(): void {
    let dragging = false
    let lastX = 0
    let lastY = 0
    this.container.addEventListener('mousedown', (event) => {
      dragging = true
      lastX = event.clientX
      lastY = event.clientY
    })
    window.addEventListener('mouseup', () => {
      dragging = false
    })
    window.addEventListener('mousemove', (event) => {
      if (!dragging) return
      const dx = event.clientX - lastX
      const dy = event.clientY - lastY
      lastX = event.clientX
      lastY = event.clientY
      const x = lonToWorldX(this.centerLon, this.zoom) - dx / TILE_SIZE
      const y = latToWorldY(this.centerLat, this.zoom) - dy / TILE_SIZE
      this.centerLon = worldXToLon(x, this.zoom)
      this.centerLat = worldYToLat(y, this.zoom)
      this.popup.classList.add('hidden')
      this.render()
    })
  }

  private render(): void {
    const width = this.container.clientWidth || 800
    const height = this.container.clientHeight || 500
    this.tileLayer.replaceChildren()
    for (const tile of tilesInView(this.centerLat, this.centerLon, this.zoom, width, height)) {
      const img = document.createElement('img')
      img.src = tileUrl(this.tileTemplate, tile)
      img.className = 'tile'
      img.style.left = `${tile.screenX}px`
      img.style.top = `${tile.screenY}px`
      img.alt = ''
      this.tileLayer.append(img)
    }
    this.markerLayer.replaceChildren()
    for (const marker of this.markers) {
      const { x, y } = project(
        marker.lat, marker.lon, this.centerLat, this.centerLon, this.zoom, width, height,
      )
      if (x < -20 || y < -20 || x > width + 20 || y > height + 20) continue
      const pin = document.createElement('button')
      pin.className = 'marker'
      pin.style.left = `${x}px`
      pin.style.top = `${y}px`
      pin.title = marker.popup.names.join(', ')
      pin.addEventListener('click', (event) => {
        event.stopPropagation()
        this.showPopup(marker, x, y)
      })
      this.markerLayer.append(pin)
    }
  }

  private showPopup(marker: MapMarkerView, x: number, y: number): void {
    const { popup } = marker
    this.popup.replaceChildren()
    const text = document.createElement('p')
    text.textContent = popup.text
    this.popup.append(text)
    const meta = document.createElement('p')
    meta.className = 'popup-meta'
    const parts = []
    if (popup.names.length) parts.push(`who: ${popup.names.join(', ')}`)
    if (popup.statuses.length) parts.push(`status: ${popup.statuses.join(', ')}`)
    if (popup.address) parts.push(`address: ${popup.address}`)
    meta.textContent = parts.join(' · ')
    this.popup.append(meta)
    this.popup.style.left = `${x + 12}px`
    this.popup.style.top = `${y - 12}px`
    this.popup.classList.remove('hidden')
  }
}
