/* tslint:disable */
/* eslint-disable */

/**
 * ZO-AccSGD against ZO-SGD on a planted least-squares problem, same
 * estimator, step size and seed. Gaps are relative to `f(x_0)`.
 */
export function compare_methods(d: number, condition: number, batch: number, h: number, noise: number, eta: number, iterations: number, seed: number): string;

/**
 * Iteration and oracle budgets for the given setting.
 */
export function complexity_plan(d: number, beta: number, lipschitz: number, radius: number, eps: number, batch: number, delta_target: number): string;

/**
 * Samples of the Legendre kernel for `beta` on `[-1, 1]`, its moments and constants.
 */
export function kernel_curve(beta: number, samples: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly compare_methods: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number];
    readonly complexity_plan: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly kernel_curve: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
