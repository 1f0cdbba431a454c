export * from "./protocol.js";
export * from "./meters.js";
export * from "./connection.js";
export * from "./console.js";
export * from "./view.js";
