export interface Panel {
  x: number
  y: number
  width: number
  height: number
}

export type Scale = (value: number) => number

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain
  const [r0, r1] = range
  const span = d1 - d0 || 1
  return (value) => r0 + ((value - d0) / span) * (r1 - r0)
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity
  let hi = -Infinity
  for (const v of values) {
    if (v < lo) lo = v
    if (v > hi) hi = v
  }
  if (!isFinite(lo)) return [0, 1]
  if (lo === hi) return [lo - 0.5, hi + 0.5]
  return [lo, hi]
}

const fmt = (v: number) => (Math.round(v * 100) / 100).toString()

export class Svg {
  private parts: string[] = []

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="monospace" font-size="11">`,
      `<rect width="${width}" height="${height}" fill="white"/>`,
    )
  }

  polyline(xs: number[], ys: number[], color: string, width = 1): void {
    const pts = xs.map((x, i) => `${fmt(x)},${fmt(ys[i])}`).join(' ')
    this.parts.push(`<polyline points="${pts}" fill="none" stroke="${color}" stroke-width="${width}"/>`)
  }

  line(x1: number, y1: number, x2: number, y2: number, color: string, dash = ''): void {
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : ''
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${color}"${dashAttr}/>`,
    )
  }

  circle(x: number, y: number, r: number, color: string): void {
    this.parts.push(`<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${color}"/>`)
  }

  text(x: number, y: number, content: string, color = 'black', anchor = 'start'): void {
    this.parts.push(
      `<text x="${fmt(x)}" y="${fmt(y)}" fill="${color}" text-anchor="${anchor}">${escapeXml(content)}</text>`,
    )
  }

  frame(panel: Panel): void {
    this.parts.push(
      `<rect x="${panel.x}" y="${panel.y}" width="${panel.width}" height="${panel.height}" ` +
        `fill="none" stroke="#888"/>`,
    )
  }

  axisLabels(panel: Panel, xDomain: [number, number], yDomain: [number, number]): void {
    const [x0, x1] = xDomain
    const [y0, y1] = yDomain
    this.text(panel.x, panel.y + panel.height + 14, tickLabel(x0))
    this.text(panel.x + panel.width, panel.y + panel.height + 14, tickLabel(x1), 'black', 'end')
    this.text(panel.x - 4, panel.y + panel.height, tickLabel(y0), 'black', 'end')
    this.text(panel.x - 4, panel.y + 10, tickLabel(y1), 'black', 'end')
  }

  render(): string {
    return this.parts.join('\n') + '\n</svg>\n'
  }
}

function tickLabel(v: number): string {
  if (v === 0) return '0'
  const abs = Math.abs(v)
  if (abs >= 1e4 || abs < 1e-3) return v.toExponential(2)
  return v.toPrecision(4)
}

function escapeXml(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
}
