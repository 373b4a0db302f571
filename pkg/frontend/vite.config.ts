import { defineConfig } from "vite";

// During development the service runs separately; proxy API calls to it.
export default defineConfig({
  server: {
    proxy: {
      "/stories": "http://127.0.0.1:8000",
      "/healthz": "http://127.0.0.1:8000",
    },
  },
  build: {
    target: "es2022",
  },
});
