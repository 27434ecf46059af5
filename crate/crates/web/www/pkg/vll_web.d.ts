/* tslint:disable */
/* eslint-disable */

/**
 * Five equal-length blocks: `x`, `ρ`, `u`, `ρ^E`, `u^E`.
 */
export function compareFinal(epsilon: number, amplitude: number, cells: number, horizon: number): Float64Array;

/**
 * Three equal-length blocks: `t`, `E(t)`, `E₀ + η`.
 */
export function energyCurve(epsilon: number, amplitude: number, cells: number, horizon: number): Float64Array;

/**
 * Three equal-length blocks: `x`, `ξ(d/δ)`, `v_bl`.
 */
export function layerProfile(epsilon: number, c: number, cells: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly compareFinal: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly energyCurve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly layerProfile: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
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
