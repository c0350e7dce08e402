/**
 * Deterministic embedding backends.
 *
 * The "imagebind-local" and "vggish-local" models are self-contained
 * featurizers with the same CLI and file contract a hosted checkpoint
 * would have: fixed output dimension, deterministic in eval mode, one
 * vector per input. They exist so the export pipeline runs offline; the
 * sidecar records which backend produced a container.
 */

import { DecodedAudio } from './wav.js';
import { DecodedImage } from './image.js';

export class ModelError extends Error {}

export const MODELS = {
  imagebind: { name: 'imagebind-local', version: '0.1.0', dim: 1024, modalities: ['image', 'audio'] },
  vggish: { name: 'vggish-local', version: '0.1.0', dim: 128, modalities: ['audio'] },
} as const;

export type ModelKey = keyof typeof MODELS;

export function resolveModel(model: string, modality: string) {
  const spec = (MODELS as Record<string, (typeof MODELS)[ModelKey]>)[model];
  if (!spec) throw new ModelError(`unknown model ${JSON.stringify(model)}`);
  if (!(spec.modalities as readonly string[]).includes(modality)) {
    throw new ModelError(`model ${model} does not support modality ${modality}`);
  }
  return spec;
}

/** 16x16 spatial grid of per-cell mean R, G, B and luminance (1024 dims). */
export function imageEmbedding(img: DecodedImage, dim = 1024): Float32Array {
  const grid = Math.round(Math.sqrt(dim / 4));
  const out = new Float32Array(grid * grid * 4);
  for (let gy = 0; gy < grid; gy++) {
    for (let gx = 0; gx < grid; gx++) {
      const x0 = Math.floor((gx * img.width) / grid);
      const x1 = Math.max(x0 + 1, Math.floor(((gx + 1) * img.width) / grid));
      const y0 = Math.floor((gy * img.height) / grid);
      const y1 = Math.max(y0 + 1, Math.floor(((gy + 1) * img.height) / grid));
      let r = 0, g = 0, b = 0, n = 0;
      for (let y = y0; y < y1 && y < img.height; y++) {
        for (let x = x0; x < x1 && x < img.width; x++) {
          const i = 3 * (y * img.width + x);
          r += img.pixels[i];
          g += img.pixels[i + 1];
          b += img.pixels[i + 2];
          n++;
        }
      }
      const base = 4 * (gy * grid + gx);
      out[base] = r / n;
      out[base + 1] = g / n;
      out[base + 2] = b / n;
      out[base + 3] = (0.299 * r + 0.587 * g + 0.114 * b) / n;
    }
  }
  return out;
}

/** Temporal energy envelope: mean |x| over `dim` equal chunks. */
export function audioEnvelopeEmbedding(audio: DecodedAudio, dim = 1024): Float32Array {
  const out = new Float32Array(dim);
  const n = audio.samples.length;
  for (let k = 0; k < dim; k++) {
    const s0 = Math.floor((k * n) / dim);
    const s1 = Math.max(s0 + 1, Math.floor(((k + 1) * n) / dim));
    let acc = 0;
    for (let i = s0; i < s1 && i < n; i++) acc += Math.abs(audio.samples[i]);
    out[k] = acc / (s1 - s0);
  }
  return out;
}

/** Log-compressed magnitude spectrum at `dim` linearly spaced frequencies. */
export function audioSpectrumEmbedding(audio: DecodedAudio, dim = 128): Float32Array {
  const n = Math.min(audio.samples.length, 65536);
  const nyquist = audio.sampleRate / 2;
  const out = new Float32Array(dim);
  for (let k = 0; k < dim; k++) {
    const freq = ((k + 1) / (dim + 1)) * nyquist;
    const w = (2 * Math.PI * freq) / audio.sampleRate;
    let re = 0, im = 0;
    for (let i = 0; i < n; i++) {
      re += audio.samples[i] * Math.cos(w * i);
      im -= audio.samples[i] * Math.sin(w * i);
    }
    out[k] = Math.log(1e-6 + Math.hypot(re, im) / n);
  }
  return out;
}

export function embedAudio(model: ModelKey, audio: DecodedAudio): Float32Array {
  return model === 'vggish'
    ? audioSpectrumEmbedding(audio, MODELS.vggish.dim)
    : audioEnvelopeEmbedding(audio, MODELS.imagebind.dim);
}
