// Offset conversions between JS UTF-16 indices and Unicode code points.
// The wire format counts offsets in code points (the server's convention),
// which diverges from UTF-16 as soon as a tweet contains an emoji.

export function utf16ToCodePoint(text: string, utf16Offset: number): number {
  let points = 0
  let units = 0
  for (const ch of text) {
    if (units >= utf16Offset) break
    units += ch.length
    points += 1
  }
  return points
}

export function codePointToUtf16(text: string, pointOffset: number): number {
  let units = 0
  let points = 0
  for (const ch of text) {
    if (points >= pointOffset) break
    units += ch.length
    points += 1
  }
  return units
}

export function codePointLength(text: string): number {
  let points = 0
  for (const _ of text) points += 1
  return points
}

export function codePointSlice(text: string, start: number, end: number): string {
  return Array.from(text).slice(start, end).join('')
}
