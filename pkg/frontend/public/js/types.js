/** Shared wire types mirroring the HTTP API schema (version 1). */
export {};
