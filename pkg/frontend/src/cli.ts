import { readFileSync, writeFileSync } from 'fs';
import { basename } from 'path';
import { LabeledCsv, Panel, renderPanel } from './render';

const USAGE = 'usage: plot --csv <file> [--csv <file> ...] --out <prefix> '
  + '[--panel power|rate|convergence]';

interface Args {
  csvs: string[];
  out: string;
  panels: Panel[];
}

export function parseArgs(argv: string[]): Args {
  if (argv[0] !== 'plot') {
    throw new Error(USAGE);
  }
  const csvs: string[] = [];
  const panels: Panel[] = [];
  let out = '';
  for (let i = 1; i < argv.length; i++) {
    switch (argv[i]) {
      case '--csv':
        csvs.push(argv[++i]);
        break;
      case '--out':
        out = argv[++i];
        break;
      case '--panel': {
        const p = argv[++i];
        if (p !== 'power' && p !== 'rate' && p !== 'convergence') {
          throw new Error(`unknown panel ${p}; ${USAGE}`);
        }
        panels.push(p);
        break;
      }
      default:
        throw new Error(`unknown argument ${argv[i]}; ${USAGE}`);
    }
  }
  if (!csvs.length || !out) {
    throw new Error(USAGE);
  }
  return { csvs, out, panels: panels.length ? panels : ['power', 'rate'] };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  try {
    const inputs: LabeledCsv[] = args.csvs.map((path) => ({
      label: basename(path).replace(/\.csv$/, ''),
      text: readFileSync(path, 'utf8'),
    }));
    for (const panel of args.panels) {
      const svg = renderPanel(panel, inputs);
      const path = `${args.out}_${panel}.svg`;
      writeFileSync(path, svg);
      console.log(`wrote ${path}`);
    }
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
