import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // needs a running service; scripts/integration.sh drives it
    exclude: ["tests/integration.test.ts", "**/node_modules/**"],
  },
});
