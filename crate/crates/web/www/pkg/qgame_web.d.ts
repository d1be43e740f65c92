/* tslint:disable */
/* eslint-disable */

export function mm1Equilibrium(lambda: number, mu: number, reward: number, cost: number): number;

export function mm1Trajectory(lambda: number, mu: number, reward: number, cost: number, iterations: number, seed: number): Float64Array;

export function observableTrajectory(uniform_service: boolean, reward: number, cost: number, iterations: number, seed: number): Float64Array;

export function twoQueueTrajectory(iterations: number, seed: number, gamma0: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly mm1Equilibrium: (a: number, b: number, c: number, d: number) => number;
    readonly mm1Trajectory: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly observableTrajectory: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly twoQueueTrajectory: (a: number, b: number, c: number) => [number, number, number, number];
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
