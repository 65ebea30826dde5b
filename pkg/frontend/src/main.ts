import { ApiClient } from "./api.js";
import { App, buildDom } from "./app.js";

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const els = buildDom(root);
  App.boot(new ApiClient(""), els)
    .then((app) => {
      // console handle for debugging
      (window as unknown as { scotosim: App }).scotosim = app;
    })
    .catch((err) => {
      root.textContent = `failed to start: ${err}`;
    });
});
