import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the live-session suite generates a phantom dataset and drives a real
    // server process, so give hooks room to breathe
    testTimeout: 120_000,
    hookTimeout: 180_000,
  },
});
