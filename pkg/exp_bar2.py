"""Vanilla-vs-perturbed + ablation sweep for the bar task."""
import sys
import time

import numpy as np

import wavemesh as wm
from wavemesh import network as nw
from wavemesh import corresp
from wavemesh.curvature import estimate_frames
from wavemesh.operators import directional_operators
from wavemesh.spectrum import solve_eigs, clamp_k
from wavemesh.wavelets import build_filterbank, KernelSpec

K, FEAT, LAYERS, EPOCHS, RES = 128, 64, 3, 40, 6

template = wm.gen_base('bar', RES)
N = template.n_vertices
deforms = [('bend', 0.9), ('bend', -0.9), ('twist', 0.35), ('twist', -0.35)]
held = ('bend', 0.5)
train_meshes = [wm.deform(template, m, g) for m, g in deforms]
test_mesh = wm.deform(template, *held)
remesh_mesh, remesh_map = wm.remesh(test_mesh)
print(f'{N} verts; remeshed test: {remesh_mesh.n_vertices} verts')

BANKS = {}
def make_bank(mesh, directions, alpha, key):
    if key in BANKS:
        return BANKS[key]
    frames = estimate_frames(mesh)
    ops = directional_operators(mesh, frames,
                                wm.AnisoConfig(alpha=alpha, directions=directions))
    spectra = [solve_eigs(o, clamp_k(K, mesh.n_vertices)) for o in ops]
    kern = KernelSpec.mexican_hat(max(s.lambda_max for s in spectra), 4,
                                  tighten=False)
    BANKS[key] = build_filterbank(spectra, kern)
    return BANKS[key]

gt = np.arange(N)
rows_test = corresp.geodesic_rows(test_mesh, np.arange(N))
root_area_test = np.sqrt(test_mesh.total_area)

def run(directions, alpha, perturb, seed, epochs, with_remesh=False):
    tag = f'd{directions}a{alpha:g}'
    bank_t = make_bank(template, directions, alpha, ('t', tag))
    bank_h = make_bank(test_mesh, directions, alpha, ('h', tag))
    banks_train = [make_bank(m, directions, alpha, (i, tag))
                   for i, m in enumerate(train_meshes)]
    items = [nw.TrainItem(coords=m.vertices, labels=gt, bank=b, name=str(i))
             for i, (m, b) in enumerate(zip(train_meshes, banks_train))]
    cfg = nw.ModelConfig(n_classes=N, encoder_dims=(64, FEAT),
                         conv_layers=LAYERS, directions=directions, scales=4,
                         perturb=perturb, seed=seed)
    model = nw.Model.initialize(cfg, N)

    ages = []
    def age_now(model):
        ds = nw.descriptors(model, template.vertices, bank_t)
        dt = nw.descriptors(model, test_mesh.vertices, bank_h)
        corr = corresp.match_nn(ds, dt)
        return float((rows_test[gt, corr] / root_area_test).mean() * 100)
    ages.append(age_now(model))
    nw.train(model, items, epochs=epochs, on_epoch=lambda m, e: ages.append(age_now(m)))
    reach = next((i for i, a in enumerate(ages) if a < 5.0), None)

    out = dict(final=ages[-1], reach=reach, untrained=ages[0])
    if with_remesh:
        res = corresp.evaluate(
            corresp.match_nn(nw.descriptors(model, template.vertices, bank_t),
                             nw.descriptors(model, test_mesh.vertices, bank_h)),
            gt, test_mesh)
        out['age'] = res.average_geodesic_error
        out['cge005'] = res.fraction_at(0.05)
        bank_r = make_bank(remesh_mesh, directions, alpha, ('r', tag))
        dr = nw.descriptors(model, remesh_mesh.vertices, bank_r)
        corr_r = corresp.match_nn(nw.descriptors(model, template.vertices, bank_t), dr)
        res_r = corresp.evaluate(corr_r, gt, remesh_mesh)
        out['age_remesh'] = res_r.average_geodesic_error
    return out

mode = sys.argv[1] if len(sys.argv) > 1 else 'main'
t0 = time.time()
if mode == 'main':
    r_p = run(4, 50.0, True, 0, EPOCHS, with_remesh=True)
    print('perturbed seed0:', r_p, f'{time.time()-t0:.0f}s')
    t1 = time.time()
    r_v = run(4, 50.0, False, 0, 80)
    print('vanilla seed0:', r_v, f'{time.time()-t1:.0f}s')
else:
    for directions, alpha in [(1, 0.0), (2, 50.0), (4, 50.0)]:
        finals = []
        for seed in (0, 1, 2):
            t1 = time.time()
            r = run(directions, alpha, True, seed, EPOCHS)
            finals.append(r['final'])
            print(f'  M={directions} alpha={alpha:g} seed={seed}: '
                  f'final {r["final"]:.3f} reach {r["reach"]} ({time.time()-t1:.0f}s)')
        print(f'M={directions}: median final AGE {np.median(finals):.3f}')
print(f'total {time.time()-t0:.0f}s')
