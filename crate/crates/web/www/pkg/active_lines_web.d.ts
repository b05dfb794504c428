/* tslint:disable */
/* eslint-disable */

/**
 * Excitation `σ₁²` for a unit-speed linear velocity over a grid of
 * directions: `n_az` azimuths in `[-π, π)` by `n_el` elevations in
 * `(-π/2, π/2)`, row-major by elevation. Empty on invalid angles.
 */
export function excitation_sweep(theta: number, phi: number, n_az: number, n_el: number): Float64Array;

/**
 * Control quantities at one state and linear velocity: `Ω_S`, the
 * eigenvalues, `J_ν`, the compensating `ω` and the angle rates it leaves.
 */
export function probe(theta: number, phi: number, eta1: number, eta2: number, nu_x: number, nu_y: number, nu_z: number): string;

/**
 * Runs a scenario described by a JSON object with the same keys as the
 * command-line config file. Returns the subsampled series and the run
 * summary, or `{"error": ...}`.
 */
export function simulate_scenario(config_json: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly excitation_sweep: (a: number, b: number, c: number, d: number) => [number, number];
    readonly probe: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly simulate_scenario: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
