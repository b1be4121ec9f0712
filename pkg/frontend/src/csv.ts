import Papa from 'papaparse';

export interface ResultRow {
  seed: number;
  realization: number;
  snr_db: number;
  sigma2: number;
  converged: boolean;
  outer_iters: number;
  objective: number;
  weighted_sum_rate: number;
  total_power: number;
  powers: number[];
  wall_time_s: number;
}

export interface TraceRow {
  seed: number;
  realization: number;
  snr_db: number;
  outer_iter: number;
  objective: number;
  weighted_sum_rate: number;
  total_power: number;
}

const RESULT_PREFIX = [
  'seed', 'realization', 'snr_db', 'sigma2', 'converged', 'outer_iters',
  'objective', 'weighted_sum_rate', 'total_power',
];
const TRACE_COLUMNS = [
  'seed', 'realization', 'snr_db', 'outer_iter', 'objective',
  'weighted_sum_rate', 'total_power',
];

function parseRaw(text: string): Record<string, string>[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`CSV parse error: ${parsed.errors[0].message}`);
  }
  if (!parsed.data.length) {
    throw new Error('CSV contains no data rows');
  }
  return parsed.data;
}

function num(row: Record<string, string>, col: string): number {
  const v = Number(row[col]);
  if (!Number.isFinite(v)) {
    // NaN columns happen for failed realizations; keep them as NaN only
    // where the schema expects numbers that may be missing
    if (row[col] === 'nan' || row[col] === 'NaN') return NaN;
    throw new Error(`non-numeric value ${JSON.stringify(row[col])} in column ${col}`);
  }
  return v;
}

/** Parse a results CSV; the header must match the harness schema exactly:
 * the fixed prefix, then power_1..power_N, then wall_time_s. */
export function parseResultsCsv(text: string): ResultRow[] {
  const data = parseRaw(text);
  const header = Object.keys(data[0]);
  for (let i = 0; i < RESULT_PREFIX.length; i++) {
    if (header[i] !== RESULT_PREFIX[i]) {
      throw new Error(`results CSV column ${i} must be ${RESULT_PREFIX[i]}, got ${header[i]}`);
    }
  }
  const powerCols: string[] = [];
  let i = RESULT_PREFIX.length;
  while (i < header.length && header[i] === `power_${powerCols.length + 1}`) {
    powerCols.push(header[i]);
    i++;
  }
  if (powerCols.length === 0) {
    throw new Error('results CSV is missing the power_1..power_N columns');
  }
  if (header[i] !== 'wall_time_s' || i !== header.length - 1) {
    throw new Error('results CSV must end with power_1..power_N, wall_time_s');
  }
  return data.map((row) => ({
    seed: num(row, 'seed'),
    realization: num(row, 'realization'),
    snr_db: num(row, 'snr_db'),
    sigma2: num(row, 'sigma2'),
    converged: row['converged'] === 'true',
    outer_iters: num(row, 'outer_iters'),
    objective: num(row, 'objective'),
    weighted_sum_rate: num(row, 'weighted_sum_rate'),
    total_power: num(row, 'total_power'),
    powers: powerCols.map((c) => num(row, c)),
    wall_time_s: num(row, 'wall_time_s'),
  }));
}

/** Parse a per-iteration trace CSV (exact column match). */
export function parseTraceCsv(text: string): TraceRow[] {
  const data = parseRaw(text);
  const header = Object.keys(data[0]);
  if (header.length !== TRACE_COLUMNS.length
      || TRACE_COLUMNS.some((c, j) => header[j] !== c)) {
    throw new Error(`trace CSV columns must be exactly: ${TRACE_COLUMNS.join(', ')}`);
  }
  return data.map((row) => ({
    seed: num(row, 'seed'),
    realization: num(row, 'realization'),
    snr_db: num(row, 'snr_db'),
    outer_iter: num(row, 'outer_iter'),
    objective: num(row, 'objective'),
    weighted_sum_rate: num(row, 'weighted_sum_rate'),
    total_power: num(row, 'total_power'),
  }));
}
