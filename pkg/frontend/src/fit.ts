/** Least-squares slope of log(cost) against log(MSE), matching the harness fit. */
export function fitLogLog(points: Array<[number, number]>): number {
  if (points.length < 3) throw new Error('need at least 3 points to fit a rate')
  for (const [cost, mse] of points) {
    if (!(cost > 0) || !(mse > 0)) throw new Error('costs and MSEs must be positive')
  }
  const x = points.map(([, mse]) => Math.log(mse))
  const y = points.map(([cost]) => Math.log(cost))
  const xMean = x.reduce((a, b) => a + b, 0) / x.length
  const yMean = y.reduce((a, b) => a + b, 0) / y.length
  let num = 0
  let den = 0
  for (let i = 0; i < x.length; i += 1) {
    num += (x[i] - xMean) * (y[i] - yMean)
    den += (x[i] - xMean) * (x[i] - xMean)
  }
  if (den === 0) throw new Error('degenerate fit: all MSEs identical')
  return num / den
}

export function formatSlope(slope: number): string {
  return slope.toPrecision(3)
}
