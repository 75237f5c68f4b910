"""Workspace and trajectory rendering for grid scenarios.

The SVG view draws the grid with obstacles, walls, service cells, one
polyline per agent, and a star wherever an agent provides services in a
coalition of two or more.  The ASCII view emits one frame per agent, exactly
height lines of width glyphs each.
"""
from __future__ import annotations

from .agents import Scenario

_COLORS = ["#2a9d3e", "#e68a1f", "#7d4fbe", "#1f7ae6", "#d43d51", "#3dbdbd"]


def _is_grid_scenario(scenario: Scenario):
    return all("," in name for a in scenario.agents for name in a.ts.states)


def _cells(agent):
    return [tuple(int(v) for v in name.split(",")) for name in agent.ts.states]


def _dimensions(scenario):
    xs = []
    ys = []
    for agent in scenario.agents:
        for x, y in _cells(agent):
            xs.append(x)
            ys.append(y)
    return max(xs) + 1, max(ys) + 1


def _wall_pairs(scenario, blocked):
    """Adjacent free cells some agent cannot move between, in either direction."""
    pairs = set()
    for agent in scenario.agents:
        cells = _cells(agent)
        index = {cell: i for i, cell in enumerate(cells)}
        moves = set()
        for (s, action), dst in agent.ts.trans.items():
            if dst != s:
                moves.add((cells[s], cells[dst]))
        for (x, y) in cells:
            for nxt in ((x + 1, y), (x, y + 1)):
                if nxt not in index or (x, y) in blocked or nxt in blocked:
                    continue
                if ((x, y), nxt) not in moves and (nxt, (x, y)) not in moves:
                    pairs.add(((x, y), nxt))
    return sorted(pairs)


def _trajectory(agent, strategy):
    """Visited cells plus star markers at synchronized service steps."""
    points = []
    stars = []
    for step in strategy.prefix + strategy.cycle:
        cell = tuple(int(v) for v in step.state.split(","))
        points.append(cell)
        if len(step.sync) > 1 and not agent.is_silent(step.action):
            stars.append(cell)
    return points, stars


def render_ascii(scenario: Scenario, strategies: dict) -> str:
    if not _is_grid_scenario(scenario):
        raise ValueError("ascii rendering needs a grid scenario")
    width, height = _dimensions(scenario)
    frames = []
    for agent in scenario.agents:
        grid = [["." for _ in range(width)] for _ in range(height)]
        free = set(_cells(agent))
        for y in range(height):
            for x in range(width):
                if (x, y) not in free:
                    grid[y][x] = "#"
        for action, label in agent.action_labels.items():
            if isinstance(label, frozenset) and label:
                for (s, act), dst in agent.ts.trans.items():
                    if act == action:
                        x, y = _cells(agent)[s]
                        grid[y][x] = action[0].upper()
        strategy = strategies.get(agent.agent_id)
        if strategy is not None:
            points, stars = _trajectory(agent, strategy)
            for x, y in points:
                if grid[y][x] == ".":
                    grid[y][x] = "o"
            for x, y in stars:
                grid[y][x] = "*"
        x0, y0 = _cells(agent)[agent.ts.initial]
        grid[y0][x0] = "S"
        rows = ["".join(grid[y]) for y in range(height - 1, -1, -1)]
        frames.append(f"agent {agent.agent_id}\n" + "\n".join(rows))
    return "\n\n".join(frames) + "\n"


def render_svg(scenario: Scenario, strategies: dict, cell_px: int = 32) -> str:
    if not _is_grid_scenario(scenario):
        raise ValueError("svg rendering needs a grid scenario")
    width, height = _dimensions(scenario)
    w_px = width * cell_px
    h_px = height * cell_px

    def corner(x, y):
        # flip vertically: y grows upward in the workspace
        return x * cell_px, (height - 1 - y) * cell_px

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px}" height="{h_px}" '
        f'viewBox="0 0 {w_px} {h_px}">',
        f'<rect width="{w_px}" height="{h_px}" fill="white"/>',
    ]
    blocked = set()
    for agent in scenario.agents:
        free = set(_cells(agent))
        for y in range(height):
            for x in range(width):
                if (x, y) not in free:
                    blocked.add((x, y))
    for x, y in sorted(blocked):
        px, py = corner(x, y)
        parts.append(
            f'<rect x="{px}" y="{py}" width="{cell_px}" height="{cell_px}" '
            f'fill="#b0b0b0" class="obstacle"/>'
        )
    for (ax, ay), (bx, by) in _wall_pairs(scenario, blocked):
        if ax != bx:  # horizontal neighbors: vertical boundary line
            x = max(ax, bx) * cell_px
            _px, py = corner(ax, ay)
            parts.append(
                f'<line x1="{x}" y1="{py}" x2="{x}" y2="{py + cell_px}" '
                f'stroke="black" stroke-width="3" class="wall"/>'
            )
        else:  # vertical neighbors: horizontal boundary line
            px, _py = corner(ax, ay)
            y = (height - max(ay, by)) * cell_px
            parts.append(
                f'<line x1="{px}" y1="{y}" x2="{px + cell_px}" y2="{y}" '
                f'stroke="black" stroke-width="3" class="wall"/>'
            )
    for x in range(width + 1):
        parts.append(
            f'<line x1="{x * cell_px}" y1="0" x2="{x * cell_px}" y2="{h_px}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
    for y in range(height + 1):
        parts.append(
            f'<line x1="0" y1="{y * cell_px}" x2="{w_px}" y2="{y * cell_px}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
    for idx, agent in enumerate(scenario.agents):
        color = _COLORS[idx % len(_COLORS)]
        cells = _cells(agent)
        for action, label in sorted(agent.action_labels.items()):
            if not isinstance(label, frozenset) or not label:
                continue
            for (s, act), _dst in sorted(agent.ts.trans.items()):
                if act != action:
                    continue
                x, y = cells[s]
                px, py = corner(x, y)
                parts.append(
                    f'<rect x="{px + 3}" y="{py + 3}" width="{cell_px - 6}" '
                    f'height="{cell_px - 6}" fill="{color}" fill-opacity="0.25" '
                    f'class="service-cell"><title>{",".join(sorted(label))}</title></rect>'
                )
    for idx, agent in enumerate(scenario.agents):
        strategy = strategies.get(agent.agent_id)
        if strategy is None:
            continue
        color = _COLORS[idx % len(_COLORS)]
        points, stars = _trajectory(agent, strategy)
        if len(points) > 1:
            coords = []
            for x, y in points:
                px, py = corner(x, y)
                coords.append(f"{px + cell_px // 2},{py + cell_px // 2}")
            parts.append(
                f'<polyline points="{" ".join(coords)}" fill="none" stroke="{color}" '
                f'stroke-width="2.5" stroke-opacity="0.85" class="trajectory"/>'
            )
        else:
            x, y = points[0] if points else cells_initial(agent)
            px, py = corner(x, y)
            parts.append(
                f'<circle cx="{px + cell_px // 2}" cy="{py + cell_px // 2}" r="5" '
                f'fill="{color}" class="trajectory-point"/>'
            )
        for x, y in stars:
            px, py = corner(x, y)
            parts.append(_star(px + cell_px // 2, py + cell_px // 2, cell_px // 3, color))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cells_initial(agent):
    return _cells(agent)[agent.ts.initial]


def _star(cx, cy, r, color) -> str:
    pts = []
    import math

    for k in range(10):
        radius = r if k % 2 == 0 else r / 2.5
        angle = math.pi / 2 + k * math.pi / 5
        pts.append(f"{cx + radius * math.cos(angle):.1f},{cy - radius * math.sin(angle):.1f}")
    return (
        f'<polygon points="{" ".join(pts)}" fill="{color}" stroke="black" '
        f'stroke-width="0.6" class="sync-star"/>'
    )
