import { aggregateBySnr, convergenceLines, SnrStat } from './aggregate';
import { parseResultsCsv, parseTraceCsv } from './csv';
import { Chart, renderChart, Series } from './svg';

export type Panel = 'power' | 'rate' | 'convergence';

export interface LabeledCsv {
  label: string;
  text: string;
}

export function buildSnrChart(panel: 'power' | 'rate', inputs: LabeledCsv[]): Chart {
  const series: Series[] = inputs.map(({ label, text }) => {
    const stats = aggregateBySnr(parseResultsCsv(text));
    const points = stats.map((s: SnrStat) => panel === 'power'
      ? { x: s.snr_db, y: s.meanPower, lo: s.minPower, hi: s.maxPower }
      : { x: s.snr_db, y: s.meanRate, lo: s.minRate, hi: s.maxRate });
    return { label, points };
  });
  return panel === 'power'
    ? { title: 'Total BS power vs SNR', xlabel: 'SNR [dB]',
        ylabel: 'mean total BS power', series }
    : { title: 'Weighted sum rate vs SNR', xlabel: 'SNR [dB]',
        ylabel: 'mean weighted sum rate [bits/channel use]', series };
}

export function buildConvergenceChart(inputs: LabeledCsv[]): Chart {
  const series: Series[] = [];
  for (const { label, text } of inputs) {
    for (const line of convergenceLines(parseTraceCsv(text))) {
      series.push({
        label: inputs.length > 1 ? `${label} ${line.label}` : line.label,
        points: line.iters.map((it, i) => ({ x: it, y: line.objectives[i] })),
      });
    }
  }
  return { title: 'Objective vs outer iteration', xlabel: 'outer iteration',
           ylabel: 'surrogate objective', series };
}

export function renderPanel(panel: Panel, inputs: LabeledCsv[]): string {
  const chart = panel === 'convergence'
    ? buildConvergenceChart(inputs)
    : buildSnrChart(panel, inputs);
  return renderChart(chart);
}
