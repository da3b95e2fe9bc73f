export { parseMatrixCsv, matrixRange, type MatrixData } from "./matrix.js";
export {
  renderCovarianceFigure,
  type CovarianceFigureJob,
} from "./covariance.js";
export {
  parseBenchCsv,
  groupBenchRows,
  fitSlope,
  renderBenchFigure,
  type BenchRow,
  type BenchGroup,
  type BenchFigureOptions,
} from "./bench.js";
export { heatColor, coldestColor, hottestColor } from "./color.js";
export { runCovarianceCli } from "./cli-covariance.js";
export { runBenchCli } from "./cli-bench.js";
