#!/usr/bin/env python3
"""Influence model and interest cascades on a synthetic population.

Builds a 400-person population and its follower graph, shows how the pairwise
influence probability decomposes, then seeds an interest cascade and compares
who gets activated under the full model vs a constant coin.
"""

from collections import Counter

from transitsim.city import BoundingBox
from transitsim.engine import RngStreams
from transitsim.population import generate_population
from transitsim.social import (cascade, generate_graph, influence_probability,
                               proximity, similar_age_influence,
                               similar_class_influence)

BBOX = BoundingBox(1.25, 103.70, 1.40, 103.90)


def main() -> None:
    streams = RngStreams(11)
    humans = generate_population(400, BBOX, streams)
    graph = generate_graph(humans, streams, degree_params=(1, 10, 2.0))

    degrees = [len(t) for t in graph.following]
    print(f"graph: {graph.n} nodes, {graph.edge_count()} edges, "
          f"mean out-degree {sum(degrees) / len(degrees):.2f}, max {max(degrees)}")

    # decompose one edge's probability
    b = next(x for x in range(graph.n) if len(graph.following[x]) >= 3)
    a = graph.following[b][0]
    ha, hb = humans[a], humans[b]
    print(f"\nedge: {b} follows {a}")
    print(f"  poster   {a}: {ha.category}, age group {ha.age_group}")
    print(f"  follower {b}: {hb.category}, age group {hb.age_group}")
    print(f"  age closeness  {similar_age_influence(ha, hb):.3f}")
    print(f"  same category  {similar_class_influence(ha, hb):.3f}")
    print(f"  distance       {proximity(ha, hb):.0f} m "
          f"(farthest connection {graph.least_proximate(b):.0f} m)")
    print(f"  activation probability {influence_probability(ha, hb, graph):.3f}")

    # one cascade per model from the same student seeds
    students = [h.id for h in humans if h.category == "student"]
    seeds = students[:3]
    base = Counter(h.category for h in humans)
    print(f"\ncascade from {len(seeds)} student seeds "
          f"(population: {dict(sorted(base.items()))})")
    constant_graph = generate_graph(humans, RngStreams(11), degree_params=(1, 10, 2.0),
                                    constant_probability=0.5)
    for label, g in (("influence model", graph), ("constant 0.5", constant_graph)):
        active = cascade(g, seeds, event_key=1, streams=streams)
        mix = Counter(humans[i].category for i in active)
        share = mix.get("student", 0) / len(active)
        print(f"  {label:16s}: {len(active):3d} activated, "
              f"student share {share:.2f}, mix {dict(sorted(mix.items()))}")


if __name__ == "__main__":
    main()
