import { AnnotatorApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const app = new AnnotatorApp(root);
void app.start();
