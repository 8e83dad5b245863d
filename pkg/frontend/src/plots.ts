import { readCsv, requireColumns, Table } from './csv'
import { fitLogLog, formatSlope } from './fit'
import { extent, linearScale, Panel, Svg } from './svg'

export type PlotKind = 'trace' | 'running-mean' | 'rate'

export interface PlotJob {
  kind: PlotKind
  inputs: string[]
  output: string
}

export const TRACE_COLUMNS = ['iter', 'theta', 'log_sigma', 'log_tau', 'log_like', 'accepted']
export const RATE_COLUMNS = ['method', 'parameter', 'epsilon', 'cost_units', 'mse', 'slope']

const PARAMETERS = ['theta', 'log_sigma', 'log_tau']
const SERIES_COLORS = ['#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b']
const WIDTH = 760
const PANEL_HEIGHT = 170
const MARGIN = { top: 30, right: 20, bottom: 34, left: 64 }

export function renderToString(job: PlotJob): string {
  if (job.inputs.length === 0) throw new Error('at least one input CSV is required')
  switch (job.kind) {
    case 'trace':
      return renderSeries(job.inputs, false)
    case 'running-mean':
      return renderSeries(job.inputs, true)
    case 'rate':
      return renderRate(job.inputs[0])
  }
}

export function runningMean(values: number[]): number[] {
  const out = new Array<number>(values.length)
  let total = 0
  values.forEach((v, i) => {
    total += v
    out[i] = total / (i + 1)
  })
  return out
}

function renderSeries(paths: string[], cumulative: boolean): string {
  const tables = paths.map((p) => {
    const table = readCsv(p)
    requireColumns(table, TRACE_COLUMNS, p)
    return table
  })
  const height = MARGIN.top + PARAMETERS.length * (PANEL_HEIGHT + MARGIN.bottom)
  const svg = new Svg(WIDTH, height)
  svg.text(MARGIN.left, 16, cumulative ? 'running mean per parameter' : 'chain trace per parameter')

  PARAMETERS.forEach((parameter, pi) => {
    const panel: Panel = {
      x: MARGIN.left,
      y: MARGIN.top + pi * (PANEL_HEIGHT + MARGIN.bottom),
      width: WIDTH - MARGIN.left - MARGIN.right,
      height: PANEL_HEIGHT,
    }
    const seriesList = tables.map((table) => {
      const raw = table.rows.map((row) => Number(row[parameter]))
      return cumulative ? runningMean(raw) : raw
    })
    const iters = tables.map((table) => table.rows.map((row) => Number(row.iter)))
    const xDomain = extent(iters.flat())
    const yDomain = extent(seriesList.flat())
    const sx = linearScale(xDomain, [panel.x, panel.x + panel.width])
    const sy = linearScale(yDomain, [panel.y + panel.height, panel.y])

    svg.frame(panel)
    svg.axisLabels(panel, xDomain, yDomain)
    svg.text(panel.x + 6, panel.y + 14, parameter)
    seriesList.forEach((series, si) => {
      svg.polyline(iters[si].map(sx), series.map(sy), SERIES_COLORS[si % SERIES_COLORS.length])
    })
  })
  return svg.render()
}

interface RateGroup {
  points: Array<[number, number]>
  csvSlope: number
}

function groupRate(table: Table, path: string): Map<string, Map<string, RateGroup>> {
  const grouped = new Map<string, Map<string, RateGroup>>()
  for (const row of table.rows) {
    const parameter = row.parameter
    const method = row.method
    if (!grouped.has(parameter)) grouped.set(parameter, new Map())
    const byMethod = grouped.get(parameter)!
    if (!byMethod.has(method)) byMethod.set(method, { points: [], csvSlope: Number(row.slope) })
    byMethod.get(method)!.points.push([Number(row.cost_units), Number(row.mse)])
  }
  for (const [parameter, byMethod] of grouped) {
    for (const [method, group] of byMethod) {
      const refit = fitLogLog(group.points)
      if (Math.abs(refit - group.csvSlope) > 1e-6) {
        throw new Error(
          `stale slope column in ${path} for ${method}/${parameter}: ` +
            `csv ${group.csvSlope} vs refit ${refit}`,
        )
      }
    }
  }
  return grouped
}

function renderRate(path: string): string {
  const table = readCsv(path)
  requireColumns(table, RATE_COLUMNS, path)
  const grouped = groupRate(table, path)
  const parameters = [...grouped.keys()]
  const height = MARGIN.top + parameters.length * (PANEL_HEIGHT + MARGIN.bottom)
  const svg = new Svg(WIDTH, height)
  svg.text(MARGIN.left, 16, 'log10 cost against log10 MSE with fitted slopes')

  parameters.forEach((parameter, pi) => {
    const panel: Panel = {
      x: MARGIN.left,
      y: MARGIN.top + pi * (PANEL_HEIGHT + MARGIN.bottom),
      width: WIDTH - MARGIN.left - MARGIN.right,
      height: PANEL_HEIGHT,
    }
    const byMethod = grouped.get(parameter)!
    const logPoints = [...byMethod.values()].flatMap((g) =>
      g.points.map(([c, m]) => [Math.log10(m), Math.log10(c)] as [number, number]),
    )
    const xDomain = extent(logPoints.map((p) => p[0]))
    const yDomain = extent(logPoints.map((p) => p[1]))
    const sx = linearScale(xDomain, [panel.x, panel.x + panel.width])
    const sy = linearScale(yDomain, [panel.y + panel.height, panel.y])

    svg.frame(panel)
    svg.axisLabels(panel, xDomain, yDomain)
    svg.text(panel.x + 6, panel.y + 14, parameter)

    let mi = 0
    for (const [method, group] of byMethod) {
      const color = SERIES_COLORS[mi % SERIES_COLORS.length]
      const slope = fitLogLog(group.points)
      for (const [cost, mse] of group.points) {
        svg.circle(sx(Math.log10(mse)), sy(Math.log10(cost)), 3, color)
      }
      // fitted line through the mean point in log space
      const mx = group.points.reduce((a, [, m]) => a + Math.log(m), 0) / group.points.length
      const my = group.points.reduce((a, [c]) => a + Math.log(c), 0) / group.points.length
      const toLog10 = Math.LOG10E
      const lineAt = (lx: number) => (my + slope * (lx / toLog10 - mx)) * toLog10
      svg.line(sx(xDomain[0]), sy(lineAt(xDomain[0])), sx(xDomain[1]), sy(lineAt(xDomain[1])), color, '4,3')
      svg.text(
        panel.x + panel.width - 6,
        panel.y + 16 + 14 * mi,
        `${method}: slope ${formatSlope(slope)}`,
        color,
        'end',
      )
      mi += 1
    }
  })
  return svg.render()
}
