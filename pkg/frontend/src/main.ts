import { boot } from "./app.js";

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? "http://127.0.0.1:8765";

const root = document.getElementById("app");
if (root) {
  boot(root, apiBase).catch((err) => {
    root.textContent = `failed to start: ${err}`;
  });
}
