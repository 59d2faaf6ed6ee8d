"""Click-to-segment on a synthetic folio.

Drops a positive point on each painted region, shows what comes back, then
demonstrates how a negative point carves a component out of a multi-click
selection.
"""

import numpy as np

from marginalia.fixtures import fixture_by_name
from marginalia.provider import MockProvider, PointPrompt, PromptSet


def center_of(mask):
    ys, xs = np.nonzero(mask.to_array())
    return float(xs.mean()), float(ys.mean())


def main():
    fx = fixture_by_name("margins")
    provider = MockProvider()
    print(f"folio {fx.name}: {fx.dims.width}x{fx.dims.height}, "
          f"regions: {', '.join(fx.labels())}")

    clicks = {}
    for label in fx.labels():
        x, y = center_of(fx.region_mask(label))
        clicks[label] = PointPrompt(x, y, "positive")
        prompts = PromptSet(points=(clicks[label],))
        [proposal] = provider.segment_with_prompts(fx.image, prompts)
        print(f"  click ({x:5.1f}, {y:5.1f}) -> mask of {proposal.mask.area} px "
              f"(expected {fx.region_mask(label).area}, label {label})")

    # two positives select two components; a negative removes one again
    both = PromptSet(points=(clicks["dragon"], clicks["faucon"]))
    [proposal] = provider.segment_with_prompts(fx.image, both)
    print(f"dragon + faucon together: {proposal.mask.area} px")

    x, y = center_of(fx.region_mask("faucon"))
    minus = PromptSet(points=(clicks["dragon"], clicks["faucon"],
                              PointPrompt(x, y, "negative")))
    [proposal] = provider.segment_with_prompts(fx.image, minus)
    print(f"after a negative click on the faucon: {proposal.mask.area} px "
          f"(the dragon alone)")


if __name__ == "__main__":
    main()
