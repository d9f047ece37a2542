# Guest bootstrap. Runs before the guest script inside the sandbox:
#   - forces the Agg backend and turns plt.show() into a save to the cwd
#   - blocks outbound sockets when FORGE_NO_NETWORK=1
#   - optionally records every rendered artist as one JSON line in
#     $FORGE_TRACE_FILE, emitted once per figure at its first save
import json
import os
import runpy
import socket
import sys


def _deny(*_args, **_kwargs):
    raise OSError("network access is disabled in the sandbox")


if os.environ.get("FORGE_NO_NETWORK") == "1":
    socket.socket.connect = _deny
    socket.socket.connect_ex = _deny
    socket.create_connection = _deny

_TRACE_PATH = os.environ.get("FORGE_TRACE_FILE")
_trace_out = None
_traced_figures = set()
_seq = [0]


def _emit(record):
    _seq[0] += 1
    record["seq"] = _seq[0]
    _trace_out.write(json.dumps(record, default=float) + "\n")
    _trace_out.flush()


def _hex(color):
    from matplotlib import colors as mcolors
    try:
        return mcolors.to_hex(color, keep_alpha=True)
    except Exception:
        try:
            arr = list(color)
            if arr and hasattr(arr[0], "__len__"):
                return [mcolors.to_hex(c, keep_alpha=True) for c in arr]
        except Exception:
            pass
        return None


def _pts(values, cap=200):
    out = []
    for v in list(values)[:cap]:
        try:
            out.append([float(x) for x in v])
        except TypeError:
            out.append(float(v))
    return out


def _patch_record(p):
    from matplotlib import patches as mp
    rec = {
        "facecolor": _hex(p.get_facecolor()),
        "edgecolor": _hex(p.get_edgecolor()),
        "linewidth": float(p.get_linewidth()),
    }
    if isinstance(p, mp.Circle):
        rec.update(kind="circle", center=_pts([p.center])[0], radius=float(p.radius))
    elif isinstance(p, mp.Arc):
        rec.update(kind="arc", center=_pts([p.center])[0], width=float(p.width),
                   height=float(p.height), angle=float(p.angle),
                   theta1=float(p.theta1), theta2=float(p.theta2))
    elif isinstance(p, mp.Ellipse):
        rec.update(kind="ellipse", center=_pts([p.center])[0], width=float(p.width),
                   height=float(p.height), angle=float(p.angle))
    elif isinstance(p, mp.Rectangle):
        rec.update(kind="rectangle", xy=_pts([p.get_xy()])[0], width=float(p.get_width()),
                   height=float(p.get_height()), angle=float(p.angle))
    elif isinstance(p, mp.Wedge):
        rec.update(kind="wedge", center=_pts([p.center])[0], r=float(p.r),
                   theta1=float(p.theta1), theta2=float(p.theta2))
    elif isinstance(p, mp.RegularPolygon):
        rec.update(kind="regular_polygon", xy=_pts([p.xy])[0],
                   numvertices=int(p.numvertices), radius=float(p.radius),
                   orientation=float(p.orientation))
    elif isinstance(p, mp.Polygon):
        xy = p.get_xy()
        verts = _pts(xy)
        if len(verts) > 1 and verts[0] == verts[-1]:
            verts = verts[:-1]
        rec.update(kind="polygon", vertices=verts, n_vertices=len(verts), closed=bool(p.get_closed()))
    elif isinstance(p, (mp.FancyArrowPatch, mp.FancyArrow, mp.Arrow)):
        rec.update(kind="arrow")
        pos = getattr(p, "_posA_posB", None)
        if pos:
            rec.update(start=_pts([pos[0]])[0], end=_pts([pos[1]])[0])
    else:
        rec.update(kind="patch", type=type(p).__name__)
    return rec


def _line_record(line):
    rec = {
        "kind": "line",
        "color": _hex(line.get_color()),
        "linestyle": str(line.get_linestyle()),
        "linewidth": float(line.get_linewidth()),
        "marker": str(line.get_marker()),
    }
    if hasattr(line, "get_data_3d"):
        xs, ys, zs = line.get_data_3d()
        rec["points"] = _pts(zip(xs, ys, zs))
        rec["n_points"] = len(xs)
    else:
        xs, ys = line.get_data()
        try:
            rec["points"] = _pts(zip(xs, ys))
            rec["n_points"] = len(xs)
        except TypeError:
            rec["points"] = [[float(xs), float(ys)]]
            rec["n_points"] = 1
    return rec


def _pick(colors, i):
    if isinstance(colors, list):
        return colors[i % len(colors)] if colors else None
    return colors


def _collection_records(c):
    from matplotlib import collections as mc
    name = type(c).__name__
    face = _hex(c.get_facecolor())
    if isinstance(c, mc.PathCollection):
        offsets = getattr(c, "_offsets3d", None)
        if offsets is not None:
            pts = _pts(zip(*offsets), cap=10_000)
        else:
            pts = _pts(c.get_offsets(), cap=10_000)
        sizes = list(c.get_sizes())
        for i, xy in enumerate(pts):
            yield {"kind": "point", "xy": xy,
                   "size": float(sizes[i % len(sizes)]) if sizes else None,
                   "facecolor": _pick(face, i)}
    elif isinstance(c, mc.LineCollection) or name == "Line3DCollection":
        segs = getattr(c, "_segments3d", None)
        if segs is None:
            segs = c.get_segments()
        for seg in list(segs)[:10_000]:
            yield {"kind": "segment", "points": _pts(seg), "color": _hex(c.get_edgecolor())}
    elif isinstance(c, mc.QuadMesh):
        coords = c.get_coordinates()
        yield {"kind": "mesh", "shape": [int(coords.shape[0]) - 1, int(coords.shape[1]) - 1]}
    elif isinstance(c, mc.PolyCollection) or name == "Poly3DCollection":
        paths = c.get_paths()
        if name == "Poly3DCollection" and hasattr(c, "_segslices"):
            for i, sl in enumerate(c._segslices[:10_000]):
                pts = c._vec[:3, sl].T
                yield {"kind": "face", "vertices": _pts(pts), "n_vertices": int(pts.shape[0]),
                       "facecolor": _pick(face, i)}
        else:
            for i, path in enumerate(list(paths)[:10_000]):
                v = _pts(path.vertices)
                if len(v) > 1 and v[0] == v[-1]:
                    v = v[:-1]
                yield {"kind": "polygon", "vertices": v, "n_vertices": len(v),
                       "facecolor": _pick(face, i)}
    else:
        yield {"kind": "collection", "type": name, "n_paths": len(c.get_paths())}


def _text_record(t):
    from matplotlib.text import Annotation
    rec = {"kind": "text", "text": t.get_text(), "position": _pts([t.get_position()])[0],
           "fontsize": float(t.get_fontsize()), "color": _hex(t.get_color())}
    if isinstance(t, Annotation):
        rec["kind"] = "annotation"
        rec["xy"] = _pts([t.xy])[0]
        rec["has_arrow"] = t.arrow_patch is not None
    return rec


def _trace_figure(fig):
    if id(fig) in _traced_figures:
        return
    _traced_figures.add(id(fig))
    fignum = getattr(fig, "number", None)
    w, h = fig.get_size_inches()
    _emit({"kind": "figure", "figure": fignum, "size_inches": [float(w), float(h)],
           "dpi": float(fig.dpi), "facecolor": _hex(fig.get_facecolor())})
    for ai, ax in enumerate(fig.axes):
        rec = {"kind": "axes", "figure": fignum, "axes": ai, "projection": ax.name,
               "title": ax.get_title(), "xlim": _pts(ax.get_xlim()), "ylim": _pts(ax.get_ylim()),
               "axis_on": bool(ax.axison)}
        if ax.name == "3d":
            rec.update(elev=float(ax.elev), azim=float(ax.azim), zlim=_pts(ax.get_zlim()))
        _emit(rec)
        artists = [*ax.collections, *ax.patches, *ax.lines, *ax.texts, *ax.artists, *ax.images]
        artists = [a for a in artists if a.get_visible()]
        artists.sort(key=lambda a: a.get_zorder())
        from matplotlib import patches as mp
        from matplotlib.lines import Line2D
        from matplotlib.collections import Collection
        from matplotlib.text import Text
        from matplotlib.image import AxesImage
        for art in artists:
            base = {"figure": fignum, "axes": ai, "z": float(art.get_zorder())}
            if isinstance(art, mp.Patch):
                records = [_patch_record(art)]
            elif isinstance(art, Line2D):
                records = [_line_record(art)]
            elif isinstance(art, Collection):
                records = list(_collection_records(art))
            elif isinstance(art, Text):
                records = [_text_record(art)]
            elif isinstance(art, AxesImage):
                arr = art.get_array()
                records = [{"kind": "image", "shape": list(getattr(arr, "shape", []))}]
            else:
                records = [{"kind": "artist", "type": type(art).__name__}]
            for r in records:
                r.update(base)
                _emit(r)
    for t in fig.texts:
        r = _text_record(t)
        r.update(figure=fignum, axes=None, z=float(t.get_zorder()))
        _emit(r)


def _install_matplotlib():
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    from matplotlib.figure import Figure

    saved_names = {}

    def _name_for(num):
        name = saved_names.get(num)
        if name is None:
            name = "figure.png" if not saved_names else "figure_%d.png" % (len(saved_names) + 1)
            saved_names[num] = name
        return name

    def _save_all(*_args, **_kwargs):
        for num in plt.get_fignums():
            plt.figure(num).savefig(_name_for(num))

    plt.show = _save_all
    Figure.show = lambda self, *a, **k: self.savefig(_name_for(self.number))

    if _trace_out is not None:
        original_savefig = Figure.savefig

        def _traced_savefig(self, *args, **kwargs):
            try:
                self.canvas.draw()
                _trace_figure(self)
            except Exception as exc:
                _emit({"kind": "__tracer_error__", "error": repr(exc)})
            return original_savefig(self, *args, **kwargs)

        Figure.savefig = _traced_savefig


def main():
    global _trace_out
    if len(sys.argv) < 2:
        sys.stderr.write("usage: boot.py SCRIPT\n")
        sys.exit(2)
    script = sys.argv[1]
    if _TRACE_PATH:
        _trace_out = open(_TRACE_PATH, "w", encoding="utf-8")
    try:
        _install_matplotlib()
        if _trace_out is not None:
            _emit({"kind": "__tracer__", "status": "attached"})
    except Exception as exc:
        if _trace_out is not None:
            _emit({"kind": "__tracer__", "status": "failed", "reason": repr(exc)})
    sys.argv = [script] + sys.argv[2:]
    sys.path.insert(0, os.path.dirname(os.path.abspath(script)))
    runpy.run_path(script, run_name="__main__")


main()
