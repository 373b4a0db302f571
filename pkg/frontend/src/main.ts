import "./styles.css";
import { StorylineApi } from "./api";
import { createApp } from "./app";

const host = document.querySelector<HTMLElement>("#app");
if (host === null) throw new Error("missing #app mount point");
createApp(host, new StorylineApi(""));
