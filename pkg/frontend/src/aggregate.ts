import { ResultRow, TraceRow } from './csv';

export interface SnrStat {
  snr_db: number;
  count: number;
  excluded: number;
  meanRate: number;
  minRate: number;
  maxRate: number;
  meanPower: number;
  minPower: number;
  maxPower: number;
}

const mean = (xs: number[]) => xs.reduce((a, b) => a + b, 0) / xs.length;

/** Per-SNR means with min/max ranges across realizations. Only converged
 * rows contribute (mirroring the harness aggregation policy); the excluded
 * count is reported per point. */
export function aggregateBySnr(rows: ResultRow[]): SnrStat[] {
  const groups = new Map<number, ResultRow[]>();
  for (const row of rows) {
    const list = groups.get(row.snr_db) ?? [];
    list.push(row);
    groups.set(row.snr_db, list);
  }
  const out: SnrStat[] = [];
  for (const snr of [...groups.keys()].sort((a, b) => a - b)) {
    const group = groups.get(snr)!;
    const good = group.filter((r) => r.converged);
    if (!good.length) {
      out.push({
        snr_db: snr, count: 0, excluded: group.length,
        meanRate: NaN, minRate: NaN, maxRate: NaN,
        meanPower: NaN, minPower: NaN, maxPower: NaN,
      });
      continue;
    }
    const rates = good.map((r) => r.weighted_sum_rate);
    const powers = good.map((r) => r.total_power);
    out.push({
      snr_db: snr,
      count: good.length,
      excluded: group.length - good.length,
      meanRate: mean(rates),
      minRate: Math.min(...rates),
      maxRate: Math.max(...rates),
      meanPower: mean(powers),
      minPower: Math.min(...powers),
      maxPower: Math.max(...powers),
    });
  }
  return out;
}

export interface ConvergenceLine {
  label: string;
  iters: number[];
  objectives: number[];
}

/** One objective-vs-iteration line per (seed, realization, snr) run. */
export function convergenceLines(rows: TraceRow[]): ConvergenceLine[] {
  const groups = new Map<string, TraceRow[]>();
  for (const row of rows) {
    const key = `seed ${row.seed} r${row.realization} ${row.snr_db} dB`;
    const list = groups.get(key) ?? [];
    list.push(row);
    groups.set(key, list);
  }
  const out: ConvergenceLine[] = [];
  for (const key of [...groups.keys()].sort()) {
    const g = groups.get(key)!.slice().sort((a, b) => a.outer_iter - b.outer_iter);
    out.push({
      label: key,
      iters: g.map((r) => r.outer_iter),
      objectives: g.map((r) => r.objective),
    });
  }
  return out;
}
