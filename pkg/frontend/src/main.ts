import { App } from "./app.js";

const root = document.getElementById("app");
if (root) {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  new App(root, { url: `${scheme}://${location.host}/ws` }).start();
}
