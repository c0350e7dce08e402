/**
 * Batch export: run an embedding backend over a directory of images or
 * audio files and write one EMB1 container (plus a JSON sidecar naming
 * the model that produced it). Per-file decode failures are logged and
 * skipped; the container is validated by re-decoding before the job is
 * considered done.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { EmbeddingMatrix, decodeEmb1, encodeEmb1 } from './emb1.js';
import { ModelKey, ModelError, embedAudio, imageEmbedding, resolveModel, MODELS } from './features.js';
import { decodePnm } from './image.js';
import { decodeWav } from './wav.js';

export class ExportError extends Error {}

export interface ExportJob {
  inputDir: string;
  modality: 'image' | 'audio';
  model: ModelKey;
  output: string;
  batchSize: number;
}

export interface ExportResult {
  written: number;
  skipped: number;
  skippedFiles: string[];
}

const EXTENSIONS: Record<string, string[]> = {
  image: ['.ppm', '.pgm'],
  audio: ['.wav'],
};

function log(event: string, extra: Record<string, unknown> = {}) {
  process.stderr.write(JSON.stringify({ event, ...extra }) + '\n');
}

function embedFile(job: ExportJob, file: string): Float32Array {
  const buf = fs.readFileSync(file);
  if (job.modality === 'image') {
    return imageEmbedding(decodePnm(buf), MODELS[job.model].dim);
  }
  return embedAudio(job.model, decodeWav(buf));
}

export function runExport(job: ExportJob): ExportResult {
  const spec = resolveModel(job.model, job.modality);
  if (job.batchSize < 1) throw new ExportError(`batch size must be >= 1, got ${job.batchSize}`);

  const extensions = EXTENSIONS[job.modality];
  const files = fs
    .readdirSync(job.inputDir)
    .filter((f) => extensions.includes(path.extname(f).toLowerCase()))
    .sort();

  const ids: string[] = [];
  const rows: Float32Array[] = [];
  const skippedFiles: string[] = [];
  for (let start = 0; start < files.length; start += job.batchSize) {
    for (const f of files.slice(start, start + job.batchSize)) {
      const stem = path.basename(f, path.extname(f));
      try {
        const row = embedFile(job, path.join(job.inputDir, f));
        if (ids.includes(stem)) {
          throw new ExportError(`duplicate id ${JSON.stringify(stem)}`);
        }
        ids.push(stem);
        rows.push(row);
        log('embedded', { file: f, dim: row.length });
      } catch (e) {
        if (e instanceof ModelError) throw e;
        skippedFiles.push(f);
        log('excluded', { file: f, reason: (e as Error).message });
      }
    }
  }
  if (files.length > 0 && ids.length === 0) {
    throw new ExportError('all input files failed to decode');
  }

  const data = new Float32Array(ids.length * spec.dim);
  rows.forEach((row, i) => data.set(row, i * spec.dim));
  const matrix: EmbeddingMatrix = { ids, dim: spec.dim, data };
  const encoded = encodeEmb1(matrix);
  fs.writeFileSync(job.output, encoded);
  decodeEmb1(fs.readFileSync(job.output)); // written container must reload

  const sidecar = {
    model: spec.name,
    version: spec.version,
    modality: job.modality,
    count: ids.length,
    skipped: skippedFiles.length,
  };
  fs.writeFileSync(job.output + '.json', JSON.stringify(sidecar, null, 2) + '\n');
  log('exported', { output: job.output, ...sidecar });
  return { written: ids.length, skipped: skippedFiles.length, skippedFiles };
}
