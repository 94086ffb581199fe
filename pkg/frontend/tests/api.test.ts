import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, type FetchFn } from "../src/api.js";
import { FakeServer } from "./helpers/fake-server.js";

describe("url building", () => {
  const api = new ApiClient("http://host:1234/");

  it("strips the trailing slash from the base url", () => {
    expect(api.sliceUrl("pos_000", 3)).toBe("http://host:1234/api/cases/pos_000/slices/3");
  });

  it("carries window parameters when given", () => {
    expect(api.sliceUrl("c", 0, 80, 200)).toBe("http://host:1234/api/cases/c/slices/0?level=80&width=200");
  });

  it("builds mask urls", () => {
    expect(api.maskUrl("c", 7)).toBe("http://host:1234/api/cases/c/mask/7");
  });
});

describe("request flows against the fake server", () => {
  function client(): { api: ApiClient; server: FakeServer } {
    const server = new FakeServer();
    server.addCase("pos_000", 1);
    server.addCase("neg_000", 0);
    return { api: new ApiClient("", server.fetchFn), server };
  }

  it("lists cases", async () => {
    const { api } = client();
    const cases = await api.listCases();
    expect(cases.map((c) => c.case_id)).toEqual(["pos_000", "neg_000"]);
    expect(cases[0].stage).toBe("imported");
  });

  it("walks seed -> segment -> accept -> delete", async () => {
    const { api } = client();
    const seeded = await api.putSeed("pos_000", { z: 2, x: 8, y: 8 });
    expect(seeded.stage).toBe("seeded");
    expect(seeded.seed).toEqual({ z: 2, x: 8, y: 8 });

    const seg = await api.segment("pos_000");
    expect(seg.stage).toBe("segmented");
    expect(Object.keys(seg.per_slice)).toHaveLength(4);

    const mask = await api.fetchPng(api.maskUrl("pos_000", 2));
    expect(mask.byteLength).toBeGreaterThan(8);

    expect((await api.accept("pos_000")).stage).toBe("accepted");
    expect((await api.deleteMask("pos_000")).stage).toBe("seeded");
  });

  it("surfaces the server's error message verbatim", async () => {
    const { api } = client();
    await expect(api.segment("pos_000")).rejects.toMatchObject({
      status: 409,
      message: "case pos_000 has no seed",
    });
    await expect(api.putSeed("pos_000", { z: 0, x: 99, y: 0 })).rejects.toThrow(
      /outside volume/,
    );
    await expect(api.accept("nope")).rejects.toMatchObject({ status: 404 });
  });

  it("wraps non-JSON error bodies in the status line", async () => {
    const fetchFn: FetchFn = async () =>
      new Response("<html>gateway timeout</html>", { status: 504, statusText: "Gateway Timeout" });
    const api = new ApiClient("", fetchFn);
    try {
      await api.listCases();
      expect.unreachable("should have thrown");
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(504);
      expect((err as ApiError).message).toMatch(/504/);
    }
  });

  it("fetchPng rejects with the JSON error for missing masks", async () => {
    const { api } = client();
    await expect(api.fetchPng(api.maskUrl("pos_000", 0))).rejects.toMatchObject({
      status: 404,
      message: "case pos_000 has no mask",
    });
  });

  it("propagates network failures as-is", async () => {
    const { api, server } = client();
    server.down = true;
    await expect(api.listCases()).rejects.toThrow(TypeError);
  });
});
