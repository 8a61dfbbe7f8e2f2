/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const compare_methods: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number];
export const complexity_plan: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
export const kernel_curve: (a: number, b: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
