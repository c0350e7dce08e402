#!/usr/bin/env node
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { ExportError, runExport } from './export.js';
import { ModelError, ModelKey } from './features.js';

async function main() {
  const argv = await yargs(hideBin(process.argv))
    .option('input', { type: 'string', demandOption: true, describe: 'directory of input files' })
    .option('modality', { choices: ['image', 'audio'] as const, demandOption: true })
    .option('model', { type: 'string', demandOption: true, describe: 'embedding backend name' })
    .option('output', { type: 'string', demandOption: true, describe: 'EMB1 output path' })
    .option('batch-size', { type: 'number', default: 16 })
    .strict()
    .parse();

  try {
    const result = runExport({
      inputDir: argv.input,
      modality: argv.modality,
      model: argv.model as ModelKey,
      output: argv.output,
      batchSize: argv['batch-size'],
    });
    process.stdout.write(JSON.stringify(result) + '\n');
  } catch (e) {
    process.stderr.write(
      JSON.stringify({ event: 'error', kind: (e as Error).constructor.name, message: (e as Error).message }) + '\n',
    );
    process.exit(e instanceof ModelError ? 2 : e instanceof ExportError ? 3 : 1);
  }
}

main();
