import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
    // The end-to-end flow test spawns the Python annotation service and
    // runs the extraction pipeline into a throwaway store first.
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
