"""
Figures plotly des domaines Ω_{n,α} et des balayages en α, export SVG via kaleido.
"""
import logging

import plotly.graph_objects as go
from plotly.subplots import make_subplots

logger = logging.getLogger(__name__)

COULEURS = {
    'upper': '#1f77b4',
    'lower': '#ff7f0e',
    'image': '#2ca02c',
}


def _trace_rectangle(rect, couleur, nom, opacite=0.35, legende=False):
    xs = [rect.x1, rect.x2, rect.x2, rect.x1, rect.x1]
    ys = [rect.y1, rect.y1, rect.y2, rect.y2, rect.y1]
    return go.Scatter(
        x=xs, y=ys, mode='lines', fill='toself', fillcolor=couleur, opacity=opacite,
        line=dict(color=couleur, width=1), name=nom, showlegend=legende,
        hovertext=rect.tag, hoverinfo='text',
    )


def creer_figure_domaine(domain, images=None, annotations=True):
    """
    Crée la figure d'un domaine : Ω⁺ en bleu, Ω⁻ en orange, images de blocs en option.

    Args:
        domain: Domain
        images: liste optionnelle de (chiffre, X₁, X₂, Y₁, Y₂) (voir planar_map.block_images)
        annotations: repères ℓ₀, r₀ et hauteurs sur les axes
    """
    fig = go.Figure()
    for i, rect in enumerate(domain.upper):
        fig.add_trace(_trace_rectangle(rect, COULEURS['upper'], 'Ω⁺', legende=i == 0))
    for i, rect in enumerate(domain.lower):
        fig.add_trace(_trace_rectangle(rect, COULEURS['lower'], 'Ω⁻', legende=i == 0))

    if images:
        for i, (d, X1, X2, Y1, Y2) in enumerate(images):
            fig.add_trace(go.Scatter(
                x=[X1, X2, X2, X1, X1], y=[Y1, Y1, Y2, Y2, Y1], mode='lines',
                line=dict(color=COULEURS['image'], width=0.5, dash='dot'),
                name='images', showlegend=i == 0, hovertext=str(d), hoverinfo='text',
            ))

    if annotations:
        ell0, r0 = domain.ell0, domain.r0
        fig.add_vline(x=ell0, line_dash='dash', line_color='grey', annotation_text='ℓ₀')
        fig.add_vline(x=r0, line_dash='dash', line_color='grey', annotation_text='r₀')
        hauteurs = sorted({round(r.y2, 6) for r in domain.upper} | {round(r.y1, 6) for r in domain.lower})
        fig.update_yaxes(tickvals=hauteurs, ticktext=[f"{h:.4g}" for h in hauteurs])

    titre = f"Ω pour n = {domain.n}, α = {domain.alpha:.6g} ({domain.kind})"
    if domain.approximate:
        titre += f", approché, résidu {domain.residual:.2g}"
    fig.update_layout(
        title=titre,
        xaxis_title='x',
        yaxis_title='y',
        plot_bgcolor='white',
        font=dict(size=12),
        title_font_size=16,
    )
    return fig


def creer_figure_scan(table):
    """
    Masse, entropie et produit en fonction de α pour une table de balayage.
    """
    lignes = table.dropna(subset=['mass']).sort_values('alpha')
    if lignes.empty:
        logger.warning("Table de balayage vide, pas de figure")
        return None
    fig = make_subplots(rows=3, cols=1, shared_xaxes=True,
                        subplot_titles=('μ(Ω_α)', 'h(T_α)', 'h(T_α)·μ(Ω_α)'))
    fig.add_trace(go.Scatter(x=lignes['alpha'], y=lignes['mass'], mode='lines+markers', name='masse'), row=1, col=1)
    fig.add_trace(go.Scatter(x=lignes['alpha'], y=lignes['entropy'], mode='lines+markers', name='entropie'),
                  row=2, col=1)
    fig.add_trace(go.Scatter(x=lignes['alpha'], y=lignes['product'], mode='lines+markers', name='produit'),
                  row=3, col=1)
    fig.update_layout(
        title=f"Balayage en α (n = {int(lignes['n'].iloc[0])})",
        plot_bgcolor='white',
        showlegend=False,
        height=800,
    )
    fig.update_xaxes(title_text='α', row=3, col=1)
    return fig


def exporter_svg(fig, chemin):
    """Écrit la figure en SVG (moteur kaleido)."""
    fig.write_image(chemin, format='svg', engine='kaleido')
    logger.info("Figure écrite dans %s", chemin)
    return chemin


def figure_en_svg(fig):
    return fig.to_image(format='svg', engine='kaleido').decode('utf-8')
