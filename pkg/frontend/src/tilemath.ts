// Web Mercator math for the tile map. World coordinates are measured in
// tiles at a given zoom (continuous); one tile renders at TILE_SIZE px.

import type { BboxDto } from './types.js'

export const TILE_SIZE = 256

export function lonToWorldX(lon: number, zoom: number): number {
  return ((lon + 180) / 360) * Math.pow(2, zoom)
}

export function latToWorldY(lat: number, zoom: number): number {
  const rad = (lat * Math.PI) / 180
  const merc = Math.log(Math.tan(rad) + 1 / Math.cos(rad))
  return ((1 - merc / Math.PI) / 2) * Math.pow(2, zoom)
}

export function worldXToLon(x: number, zoom: number): number {
  return (x / Math.pow(2, zoom)) * 360 - 180
}

export function worldYToLat(y: number, zoom: number): number {
  const n = Math.PI * (1 - (2 * y) / Math.pow(2, zoom))
  return (Math.atan(Math.sinh(n)) * 180) / Math.PI
}

/** Largest integer zoom at which the box fits the viewport. */
export function fitZoom(bbox: BboxDto, widthPx: number, heightPx: number): number {
  for (let zoom = 18; zoom >= 0; zoom--) {
    const width =
      (lonToWorldX(bbox.max_lon, zoom) - lonToWorldX(bbox.min_lon, zoom)) * TILE_SIZE
    const height =
      (latToWorldY(bbox.min_lat, zoom) - latToWorldY(bbox.max_lat, zoom)) * TILE_SIZE
    if (width <= widthPx && height <= heightPx) return zoom
  }
  return 0
}

export function bboxCenter(bbox: BboxDto): { lat: number; lon: number } {
  return {
    lat: (bbox.min_lat + bbox.max_lat) / 2,
    lon: (bbox.min_lon + bbox.max_lon) / 2,
  }
}

export interface TilePlacement {
  z: number
  x: number
  y: number
  screenX: number
  screenY: number
}

/** Tiles covering a viewport centered on (lat, lon), with screen positions. */
export function tilesInView(
  lat: number,
  lon: number,
  zoom: number,
  widthPx: number,
  heightPx: number,
): TilePlacement[] {
  const worldSize = Math.pow(2, zoom)
  const centerX = lonToWorldX(lon, zoom)
  const centerY = latToWorldY(lat, zoom)
  const leftWorld = centerX - widthPx / 2 / TILE_SIZE
  const topWorld = centerY - heightPx / 2 / TILE_SIZE
  const tiles: TilePlacement[] = []
  const firstX = Math.floor(leftWorld)
  const firstY = Math.floor(topWorld)
  const lastX = Math.floor(leftWorld + widthPx / TILE_SIZE)
  const lastY = Math.floor(topWorld + heightPx / TILE_SIZE)
  for (let x = firstX; x <= lastX; x++) {
    for (let y = firstY; y <= lastY; y++) {
      if (y < 0 || y >= worldSize) continue
      const wrappedX = ((x % worldSize) + worldSize) % worldSize
      tiles.push({
        z: zoom,
        x: wrappedX,
        y,
        screenX: Math.round((x - leftWorld) * TILE_SIZE),
        screenY: Math.round((y - topWorld) * TILE_SIZE),
      })
    }
  }
  return tiles
}

/** Pixel position of a point in a viewport centered on (centerLat, centerLon). */
export function project(
  lat: number,
  lon: number,
  centerLat: number,
  centerLon: number,
  zoom: number,
  widthPx: number,
  heightPx: number,
): { x: number; y: number } {
  const x =
    (lonToWorldX(lon, zoom) - lonToWorldX(centerLon, zoom)) * TILE_SIZE + widthPx / 2
  const y =
    (latToWorldY(lat, zoom) - latToWorldY(centerLat, zoom)) * TILE_SIZE + heightPx / 2
  return { x, y }
}

export function tileUrl(template: string, tile: TilePlacement): string {
  return template
    .replace('{z}', String(tile.z))
    .replace('{x}', String(tile.x))
    .replace('{y}', String(tile.y))
}
