import { AnnotationClient } from "./api";
import { AnnotatorApp } from "./view";
import "./styles.css";

const params = new URLSearchParams(window.location.search);
const annotator = params.get("annotator") ?? "anonymous";
const narrative = params.get("narrative") ?? undefined;
const batch = params.get("batch") ?? undefined;

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}

const app = new AnnotatorApp(root, new AnnotationClient());
app.start(annotator, narrative, batch).catch((err) => {
  root.textContent = `Could not start session: ${err instanceof Error ? err.message : err}`;
});
