#!/usr/bin/env node
import { writeFileSync } from 'fs'
import { PlotJob, PlotKind, renderToString } from './plots'

const USAGE = 'usage: plots <trace|running-mean|rate> --in <csv...> --out <file.svg>'

export function parseArgs(argv: string[]): PlotJob {
  const [kind, ...rest] = argv
  if (!kind || !['trace', 'running-mean', 'rate'].includes(kind)) {
    throw new UsageError(`unknown plot kind '${kind ?? ''}'\n${USAGE}`)
  }
  const inputs: string[] = []
  let output = ''
  let mode: 'in' | 'out' | null = null
  for (const arg of rest) {
    if (arg === '--in') mode = 'in'
    else if (arg === '--out') mode = 'out'
    else if (arg.startsWith('--')) throw new UsageError(`unknown flag ${arg}\n${USAGE}`)
    else if (mode === 'in') inputs.push(arg)
    else if (mode === 'out') output = arg
    else throw new UsageError(`unexpected argument ${arg}\n${USAGE}`)
  }
  if (inputs.length === 0 || !output) throw new UsageError(USAGE)
  return { kind: kind as PlotKind, inputs, output }
}

export class UsageError extends Error {}

export function main(argv: string[]): number {
  try {
    const job = parseArgs(argv)
    writeFileSync(job.output, renderToString(job))
    console.log(`wrote ${job.output}`)
    return 0
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(String(err.message))
      return 1
    }
    console.error(`error: ${err instanceof Error ? err.message : err}`)
    return 2
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)))
}
