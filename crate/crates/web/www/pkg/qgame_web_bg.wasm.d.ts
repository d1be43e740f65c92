/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const mm1Equilibrium: (a: number, b: number, c: number, d: number) => number;
export const mm1Trajectory: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const observableTrajectory: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const twoQueueTrajectory: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
