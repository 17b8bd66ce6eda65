import { App } from "./app.js";
import { HttpApi } from "./api.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "";
const root = document.getElementById("root");
if (root) {
  new App(root, new HttpApi(base));
}
