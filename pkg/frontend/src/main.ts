import { mountApp } from "./app";

// Default to the device's conventional WebSocket port on the page's host;
// override with ?ws=ws://host:port when serving the bundle elsewhere.
const params = new URLSearchParams(location.search);
const url = params.get("ws") ?? `ws://${location.hostname || "127.0.0.1"}:7701`;

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
mountApp(root, { url });
