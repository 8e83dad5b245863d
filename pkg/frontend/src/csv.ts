import { readFileSync } from 'fs'

export interface Table {
  header: string[]
  rows: Record<string, string>[]
}

export function readCsv(path: string): Table {
  const text = readFileSync(path, 'utf8').trim()
  if (!text) throw new Error(`empty CSV file: ${path}`)
  const lines = text.split(/\r?\n/)
  const header = lines[0].split(',')
  const rows = lines.slice(1).map((line) => {
    const parts = line.split(',')
    const row: Record<string, string> = {}
    header.forEach((name, i) => {
      row[name] = parts[i]
    })
    return row
  })
  return { header, rows }
}

export function requireColumns(table: Table, columns: string[], path: string): void {
  for (const column of columns) {
    if (!table.header.includes(column)) {
      throw new Error(`missing column '${column}' in ${path}`)
    }
  }
}

export function numericColumn(table: Table, column: string): number[] {
  return table.rows.map((row) => Number(row[column]))
}
