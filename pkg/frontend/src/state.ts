// UI state and pure model-editing helpers. All parameter edits clamp to
// the documented ranges, so the UI can never build a model the service
// would reject for range violations.

import { KernelJson, ModelJson } from "./api.js";

export type PreviewMode = "simulate" | "compensate" | "region";

export interface UiState {
  sessionId: string;
  selectedKernel: number | null;
  previewMode: PreviewMode;
  lambda: number;
  pendingRender: boolean;
}

export const KERNEL_DEFAULTS = {
  sigma: 0.08,
  omega: 0.5,
  theta_rad: 0.0,
  psi_gain: 0.3,
};

export type ParamKey = "sigma" | "omega" | "theta_rad" | "psi_gain";

export const PARAM_LIMITS: Record<ParamKey, [number, number]> = {
  sigma: [0.01, 0.4],
  omega: [0.0, 1.0],
  theta_rad: [-Math.PI, Math.PI],
  psi_gain: [0.0, 0.95],
};

export const LAMBDA_LIMITS: [number, number] = [0.01, 0.99];

export function clamp(value: number, lo: number, hi: number): number {
  return Math.min(Math.max(value, lo), hi);
}

export function emptyModel(): ModelJson {
  return { version: 1, lambda: 0.5, kernels: [] };
}

export function cloneModel(model: ModelJson): ModelJson {
  return {
    version: model.version,
    lambda: model.lambda,
    kernels: model.kernels.map((k) => ({ ...k, mu: [k.mu[0], k.mu[1]] })),
  };
}

export function addKernel(model: ModelJson, u: number, v: number): ModelJson {
  const next = cloneModel(model);
  const kernel: KernelJson = {
    mu: [clamp(u, 0, 1), clamp(v, 0, 1)],
    ...KERNEL_DEFAULTS,
  };
  next.kernels.push(kernel);
  return next;
}

export function moveKernel(model: ModelJson, index: number, u: number, v: number): ModelJson {
  const next = cloneModel(model);
  next.kernels[index].mu = [clamp(u, 0, 1), clamp(v, 0, 1)];
  return next;
}

export function removeKernel(model: ModelJson, index: number): ModelJson {
  const next = cloneModel(model);
  next.kernels.splice(index, 1);
  return next;
}

export function setParam(
  model: ModelJson,
  index: number,
  key: ParamKey,
  value: number,
): ModelJson {
  const next = cloneModel(model);
  const [lo, hi] = PARAM_LIMITS[key];
  next.kernels[index][key] = clamp(value, lo, hi);
  return next;
}

export function setLambda(model: ModelJson, value: number): ModelJson {
  const next = cloneModel(model);
  next.lambda = clamp(value, LAMBDA_LIMITS[0], LAMBDA_LIMITS[1]);
  return next;
}
